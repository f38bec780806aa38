//! Temperatures and persona sentences for a 24-member cohort.

use refprime::participants::{assign_temperatures, render_persona_prompt, PersonaPool};
use refprime::seeding;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let temps = assign_temperatures(24, 0.2, 1.0, seeding::derive_seed(3, "temperatures/E1a"))?;
    let pool = PersonaPool::default();
    let mut rng = seeding::stream(3, "personas/E1a");
    for (i, t) in temps.iter().enumerate() {
        let persona = pool.draw(&mut rng).expect("non-empty pool");
        println!("p{:02}  T={t:.3}  {}", i + 1, render_persona_prompt(&persona)?);
    }
    Ok(())
}
