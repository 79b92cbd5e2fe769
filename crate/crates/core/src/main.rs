fn main() {
    // populated once the cli module lands
}
