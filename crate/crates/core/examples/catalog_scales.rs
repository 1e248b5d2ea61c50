//! Load the bundled catalog and print per-type feature scales and the
//! normalized radar values for each milk.

use arshopping::catalog::normalize;
use arshopping::Catalog;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let catalog = Catalog::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/catalog.json"))?;
    println!("{} products, {} coupons", catalog.len(), catalog.coupons().len());

    let features = ["price", "rating", "protein_g", "calories"];
    let scales = catalog.feature_scales("milk", &features);
    for s in &scales {
        println!(
            "milk/{:<10} [{:>7.2}, {:>7.2}] {:?}",
            s.feature, s.min_value, s.max_value, s.direction
        );
    }

    for p in catalog.products().iter().filter(|p| p.product_type == "milk") {
        let values: Vec<String> = normalize(p, &scales, &features)?
            .iter()
            .map(|v| {
                if v.missing {
                    "  -- ".into()
                } else {
                    format!("{:.2}", v.value)
                }
            })
            .collect();
        println!("{:<10} ${:<5} {}", p.product_id, p.price, values.join("  "));
    }

    // A type with a single product has nothing to compare against.
    let lone = catalog.feature_scales("kombucha", &["price"]);
    let v = normalize(catalog.get("kombucha-001").unwrap(), &lone, &["price"])?;
    println!("kombucha-001 price on a degenerate scale: {}", v[0].value);

    match Catalog::from_json_str(r#"{"products": [{"product_id": 7}]}"#) {
        Ok(_) => unreachable!(),
        Err(e) => println!("bad catalog: {e}"),
    }
    Ok(())
}
