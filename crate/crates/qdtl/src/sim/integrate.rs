//! Fixed-step fourth-order Runge–Kutta integration of quantified ODE
//! systems, with bisection refinement of the evolution-domain exit time.

use super::run::{eval_fo_formula, eval_term, object_args, SimCtx, SimError};
use super::state::{SimState, Value};
use crate::syntax::{Binder, OdeItem, StateFormula, REAL};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct OdeOutcome {
    pub duration: f64,
    /// (time offset, state) samples on the integration grid, endpoint
    /// included.
    pub samples: Vec<(f64, SimState)>,
    pub final_state: SimState,
}

/// One evolved location with its right-hand side and binder instantiation.
struct Evolved {
    func: String,
    ids: Vec<usize>,
    rhs: crate::syntax::Term,
    binder_val: Option<(String, Value)>,
}

/// Sample trace outcomes of a quantified ODE under its evolution domain.
/// Durations are drawn from the generator unconditionally and in a fixed
/// order so that both program semantics stay aligned; each is clamped to
/// the domain exit time, refined by bisection to `step / 1000`.
pub fn sample_ode(
    ctx: &SimCtx<'_>,
    st: &SimState,
    binder: &Option<Binder>,
    items: &[OdeItem],
    domain: &StateFormula,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<OdeOutcome>, SimError> {
    // Draw all durations first, whatever happens below.
    let durations: Vec<f64> =
        (0..ctx.cfg.ode_durations).map(|_| rng.gen_range(0.0..ctx.cfg.max_duration)).collect();

    let evolved = build_evolved(ctx, st, binder, items)?;

    if !eval_fo_formula(ctx, st, domain)? {
        return Ok(Vec::new());
    }

    let mut outcomes = vec![OdeOutcome {
        duration: 0.0,
        samples: vec![(0.0, st.clone())],
        final_state: st.clone(),
    }];
    for d in durations {
        let o = integrate(ctx, st, &evolved, domain, d)?;
        let dup = outcomes.iter().any(|p| (p.duration - o.duration).abs() <= 1e-12);
        if !dup {
            outcomes.push(o);
        }
    }
    Ok(outcomes)
}

fn build_evolved(
    ctx: &SimCtx<'_>,
    st: &SimState,
    binder: &Option<Binder>,
    items: &[OdeItem],
) -> Result<Vec<Evolved>, SimError> {
    let insts: Vec<Option<(String, Value)>> = match binder {
        None => vec![None],
        Some(b) => {
            if b.sort == REAL {
                return Err(SimError::Unsupported("quantified ODE over ℝ".into()));
            }
            (0..st.pool(&b.sort))
                .map(|o| Some((b.var.clone(), Value::Obj(o))))
                .collect()
        }
    };
    let mut evolved: Vec<Evolved> = Vec::new();
    for inst in &insts {
        let mut env = st.clone();
        if let Some((v, val)) = inst {
            env.vars.insert(v.clone(), *val);
        }
        for it in items {
            let ids = object_args(ctx, &env, &it.func, &it.args)?;
            // Conflicting equations for one location: keep the first
            // occurrence as the canonical choice.
            if evolved.iter().any(|e| e.func == it.func && e.ids == ids) {
                continue;
            }
            evolved.push(Evolved {
                func: it.func.clone(),
                ids,
                rhs: it.rhs.clone(),
                binder_val: inst.clone(),
            });
        }
    }
    Ok(evolved)
}

/// Integrate a quantified ODE for exactly `duration` (truncating at the
/// evolution-domain exit) with the configured step; no duration sampling.
pub fn integrate_ode(
    ctx: &SimCtx<'_>,
    st: &SimState,
    binder: &Option<Binder>,
    items: &[OdeItem],
    domain: &StateFormula,
    duration: f64,
) -> Result<OdeOutcome, SimError> {
    let evolved = build_evolved(ctx, st, binder, items)?;
    integrate(ctx, st, &evolved, domain, duration)
}

fn write_vector(st: &SimState, evolved: &[Evolved], y: &[f64]) -> SimState {
    let mut s = st.clone();
    for (e, v) in evolved.iter().zip(y) {
        s.set(&e.func, e.ids.clone(), Value::R(*v));
    }
    s
}

fn read_vector(ctx: &SimCtx<'_>, st: &SimState, evolved: &[Evolved]) -> Vec<f64> {
    evolved.iter().map(|e| st.get(ctx.sig, &e.func, &e.ids).as_f64()).collect()
}

fn derivative(
    ctx: &SimCtx<'_>,
    base: &SimState,
    evolved: &[Evolved],
    y: &[f64],
) -> Result<Vec<f64>, SimError> {
    let at = write_vector(base, evolved, y);
    evolved
        .iter()
        .map(|e| {
            let mut env = at.clone();
            if let Some((v, val)) = &e.binder_val {
                env.vars.insert(v.clone(), *val);
            }
            eval_term(ctx, &env, &e.rhs).map(|v| v.as_f64())
        })
        .collect()
}

fn rk4_step(
    ctx: &SimCtx<'_>,
    base: &SimState,
    evolved: &[Evolved],
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>, SimError> {
    let k1 = derivative(ctx, base, evolved, y)?;
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = derivative(ctx, base, evolved, &y2)?;
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = derivative(ctx, base, evolved, &y3)?;
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = derivative(ctx, base, evolved, &y4)?;
    Ok(y
        .iter()
        .enumerate()
        .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrate for (up to) `duration`, truncating at the evolution-domain
/// exit. The initial state is assumed to satisfy the domain.
fn integrate(
    ctx: &SimCtx<'_>,
    st: &SimState,
    evolved: &[Evolved],
    domain: &StateFormula,
    duration: f64,
) -> Result<OdeOutcome, SimError> {
    let h = ctx.cfg.step;
    let mut samples: Vec<(f64, SimState)> = vec![(0.0, st.clone())];
    let mut y = read_vector(ctx, st, evolved);
    let mut t = 0.0f64;
    while t < duration - 1e-15 {
        let step = h.min(duration - t);
        let y_next = rk4_step(ctx, st, evolved, &y, step)?;
        let s_next = write_vector(st, evolved, &y_next);
        if !eval_fo_formula(ctx, &s_next, domain)? {
            // Bisect (t, t + step] for the largest time still inside the
            // domain, down to step / 1000.
            let (te, ye) = bisect_exit(ctx, st, evolved, domain, &y, t, step, h * 1e-3)?;
            let s_exit = write_vector(st, evolved, &ye);
            if te > t + 1e-15 {
                samples.push((te, s_exit.clone()));
            }
            let final_state = samples.last().unwrap().1.clone();
            return Ok(OdeOutcome { duration: samples.last().unwrap().0, samples, final_state });
        }
        t += step;
        y = y_next;
        samples.push((t, s_next));
    }
    let final_state = samples.last().unwrap().1.clone();
    Ok(OdeOutcome { duration: t, samples, final_state })
}

fn bisect_exit(
    ctx: &SimCtx<'_>,
    base: &SimState,
    evolved: &[Evolved],
    domain: &StateFormula,
    y_at_t: &[f64],
    t: f64,
    step: f64,
    tol: f64,
) -> Result<(f64, Vec<f64>), SimError> {
    let mut lo = 0.0f64; // offset from t, domain holds
    let mut hi = step; // domain fails
    let mut y_lo = y_at_t.to_vec();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let y_mid = rk4_step(ctx, base, evolved, y_at_t, mid)?;
        let s_mid = write_vector(base, evolved, &y_mid);
        if eval_fo_formula(ctx, &s_mid, domain)? {
            lo = mid;
            y_lo = y_mid;
        } else {
            hi = mid;
        }
    }
    Ok((t + lo, y_lo))
}
