//! Build the language of the coded subshift and look at a few words.

use odogibbs::language::{two_sided_radius, LanguageTable, Side, Word};

fn main() -> odogibbs::Result<()> {
    let max_len = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let t = LanguageTable::build(max_len, LanguageTable::default_depth(max_len))?;
    println!("len  |L-|  |L+|  2(d+1)^3");
    for d in [1, 2, 3, 4, 5, 8, 16, 32, 64].into_iter().filter(|&d| d <= max_len) {
        println!("{d:3}  {:5}  {:5}  {}", t.count(Side::Under, d)?, t.count(Side::Over, d)?, 2 * (d + 1).pow(3));
    }

    for w in ["bbbbb", "aba", "abbbbb", "abbbba", "aaaaaaaaaaaaaaaaaaaaaaaaaaa", "aaaaaaaaaaaaaaaaaaaaaaaaaaaa"] {
        let word: Word = w.parse()?;
        if word.len() <= max_len {
            println!("{w:>28}  {:?}", t.contains(&word)?);
        }
    }

    let d = t.maximal_decompose(&"aababbbbbaaba".parse()?)?;
    println!("maximal decomposition: {:?}", d.segments);

    let window: Word = "aaabbbbbaaa".parse()?;
    println!("radius of {window}: {:?}", two_sided_radius(&window.letters(), &t)?);
    Ok(())
}
