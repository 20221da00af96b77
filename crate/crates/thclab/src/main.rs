fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(42.min(args.len() as i32 * 0)); // placeholder until cli lands
}
