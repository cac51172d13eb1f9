//! Library side of the `waveray` command: flag parsing helpers, image
//! output, the convergence comparison harness and the phase-space lab.

pub mod compare;
pub mod output;
pub mod wdf_lab;

use waveray::render::Window;

/// Parses `WxH`.
pub fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in `{s}`"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in `{s}`"))?;
    if w == 0 || h == 0 {
        return Err(format!("resolution must be positive, got `{s}`"));
    }
    Ok((w, h))
}

/// Parses `x,y,w,h`.
pub fn parse_roi(s: &str) -> Result<Window, String> {
    let v = parse_list::<usize>(s)?;
    match v.as_slice() {
        [x, y, w, h] if *w > 0 && *h > 0 => Ok(Window {
            x: *x,
            y: *y,
            w: *w,
            h: *h,
        }),
        _ => Err(format!("expected x,y,w,h with positive w and h, got `{s}`")),
    }
}

/// Parses a strictly increasing list of sample counts.
pub fn parse_ladder(s: &str) -> Result<Vec<usize>, String> {
    let v = parse_list::<usize>(s)?;
    if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("ladder must be positive and strictly increasing, got `{s}`"));
    }
    Ok(v)
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("bad number `{t}` in `{s}`")))
        .collect()
}

/// Worker cap from `WAVERAY_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>, String> {
    match std::env::var("WAVERAY_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("WAVERAY_THREADS must be a positive integer, got `{v}`")),
        },
        Err(_) => Ok(None),
    }
}
