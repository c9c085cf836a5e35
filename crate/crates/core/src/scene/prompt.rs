use super::{color_name, SceneConfig};
use crate::numfmt::short;

/// Fixed English template describing every object's physical setup.
pub fn render_prompt(config: &SceneConfig) -> String {
    let n = config.objects.len();
    let mut out = format!(
        "A physics scene with {n} object{} on a flat ground under gravity {} m/s^2.",
        if n == 1 { "" } else { "s" },
        short(config.gravity)
    );
    for o in &config.objects {
        let f = o.initial_force;
        out.push(' ');
        out.push_str(&format!(
            "A {} {} ({} kg, {} m across) ",
            color_name(o.color),
            o.category_label,
            short(o.mass),
            short(o.characteristic_size),
        ));
        if f.magnitude > 0.0 {
            out.push_str(&format!(
                "is pushed with {} N toward {} degrees from a height of {} m.",
                short(f.magnitude),
                short(f.direction_deg),
                short(o.drop_height)
            ));
        } else {
            out.push_str(&format!(
                "is dropped from a height of {} m without a push.",
                short(o.drop_height)
            ));
        }
    }
    out
}
