//! Bundled experiment configurations.

macro_rules! presets {
    ($($name:literal),+ $(,)?) => {
        /// `(name, TOML text)` for every bundled preset.
        pub const PRESETS: &[(&str, &str)] = &[$(($name, include_str!(concat!("../presets/", $name, ".toml")))),+];
    };
}

presets!(
    "thermal-hbt",
    "cascade",
    "hom-entangled",
    "laser-beating",
    "visibility-decay",
    "thermal-g3",
    "fermion-g3",
    "thermal-g4",
    "burt-ratio",
    "oracle",
    "subwavelength",
    "degeneracy",
    "laser-degeneracy",
    "fermion-hbt",
    "fermion-hom",
    "forced-distinguishable",
    "mz-gaussian",
);

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Leading comment block of a preset, joined into one line.
pub fn summary(text: &str) -> String {
    text.lines().map_while(|l| l.strip_prefix("# ")).collect::<Vec<_>>().join(" ")
}
