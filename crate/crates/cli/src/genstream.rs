//! Materializes a synthetic stream to a CSV + schema file pair.

use std::io::{BufWriter, Write};

use anyhow::{bail, Context, Result};

use streamcart::schema::format_instance;

use crate::opts::GenstreamArgs;
use crate::source::SourceSpec;

pub fn run(args: &GenstreamArgs) -> Result<()> {
    let spec = SourceSpec::resolve(&args.stream, args.seed)?;
    let SourceSpec::Synthetic { schema, .. } = &spec else {
        bail!("genstream materializes synthetic streams; it does not copy CSV input");
    };
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let schema_path = args.out.join("stream.schema");
    std::fs::write(&schema_path, schema.to_file_string())?;
    let csv_path = args.out.join("stream.csv");
    let mut writer = BufWriter::new(std::fs::File::create(&csv_path)?);
    let mut source = spec.training_source()?;
    let mut written = 0u64;
    while let Some(inst) = source.next_instance()? {
        writeln!(writer, "{}", format_instance(&inst, schema))?;
        written += 1;
    }
    writer.flush()?;
    println!(
        "wrote {written} records to {} (schema: {})",
        csv_path.display(),
        schema_path.display()
    );
    Ok(())
}
