fn main() {
    println!("under construction");
}
