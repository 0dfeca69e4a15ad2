//! Plotting scripts emitted next to the CSVs they read. Nothing is rendered
//! here; running a script with matplotlib produces the figure.

use std::path::Path;

use crate::CliError;

fn script(csv: &str, x: &str, y: &[&str], xlabel: &str, ylabel: &str, png: &str) -> String {
    let cols = y.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(", ");
    format!(
        "import csv\nimport sys\n\nimport matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n\
         rows = list(csv.DictReader(open({csv:?})))\n\
         x = [float(r[{x:?}]) for r in rows]\n\
         fig, ax = plt.subplots()\n\
         for col in [{cols}]:\n    ax.plot(x, [float(r[col]) for r in rows], label=col)\n\
         ax.set_xlabel({xlabel:?})\nax.set_ylabel({ylabel:?})\nax.legend()\n\
         fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png:?}, dpi=150)\n"
    )
}

fn emit(dir: &Path, name: &str, body: String) -> Result<String, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    Ok(name.to_string())
}

pub fn energy_vs_time(dir: &Path, csv: &str) -> Result<String, CliError> {
    emit(dir, "plot_energy.py", script(csv, "t", &["energy"], "t", "I(u(t))", "energy.png"))
}

pub fn fibering_map(dir: &Path, csv: &str) -> Result<String, CliError> {
    emit(dir, "plot_fiber.py", script(csv, "t", &["value", "slope"], "t", "I(t u)", "fiber.png"))
}

pub fn path_profile(dir: &Path, csv: &str, name: &str) -> Result<String, CliError> {
    let png = name.replace(".py", ".png");
    emit(dir, name, script(csv, "s", &["energy"], "s", "I along path", &png))
}
