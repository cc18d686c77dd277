//! The one-bit decoder fault: with instruction bit 5 inverted on the CA
//! logic-group path, c.or and c.and trade places (and c.sub/c.xor).

use lockfault::chacha::{quarter_round_words, FaultSpec};
use lockfault::rvc::{
    decode, decode_word, encode, run_quarter_round, CompressedInstr, DecodedInstr, KeyGateMask,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bit5 = KeyGateMask::logic_path(0x20);
    println!("{:<8}{:<20}{:<20}", "word", "clean", "bit 5 flipped");
    for op in [
        DecodedInstr::Sub { rd: 10, rs2: 11 },
        DecodedInstr::Xor { rd: 10, rs2: 11 },
        DecodedInstr::Or { rd: 10, rs2: 11 },
        DecodedInstr::And { rd: 10, rs2: 11 },
    ] {
        let w = encode(&op)?;
        println!(
            "{:#06x}  {:<20}{:<20}",
            w.word(),
            decode_word(w.word()).to_string(),
            decode(w, bit5).to_string()
        );
    }

    // Other formats do not go through the CA decode path.
    let add = CompressedInstr::new(0x952e)?;
    println!(
        "{:#06x}  {:<20}{:<20}",
        add.word(),
        decode_word(0x952e).to_string(),
        decode(add, bit5).to_string()
    );

    let s = [0x1111_1111, 0x0102_0304, 0x9b8d_6f43, 0x0123_4567];
    let [a, b, c, d] = s;
    let clean = run_quarter_round(a, b, c, d, KeyGateMask::ZERO)?;
    let faulted = run_quarter_round(a, b, c, d, bit5)?;
    println!("\nquarter round on {s:08x?}");
    println!("  interpreter, clean:   {clean:08x?}");
    println!("  interpreter, faulted: {faulted:08x?}");
    println!(
        "  reference OR->AND:    {:08x?}",
        quarter_round_words(s, &FaultSpec::OrToAnd)
    );

    // A fetch-line fault on bit 0 turns the first instruction illegal.
    match run_quarter_round(a, b, c, d, KeyGateMask::uniform(1)) {
        Err(e) => println!("  fetch bit 0 inverted: {e}"),
        Ok(r) => println!("  fetch bit 0 inverted: {r:08x?}"),
    }
    Ok(())
}
