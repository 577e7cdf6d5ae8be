use rydchain::eigen::lowest_eigenpairs;
use rydchain::lzmodel::{analytic_eigenstates, TwoLevelParams};
use rydchain::pulse::{standard_schedule, ControlPoint, Drive};
use rydchain::spectrum::{gap_trace, nonadiabatic_coupling};
use rydchain::{DiagonalCache, HamiltonianParams, LatticeSpec};

fn cache(n: usize) -> DiagonalCache {
    DiagonalCache::new(&LatticeSpec::standard(n).unwrap()).unwrap()
}

#[test]
fn generic_two_level_eigenpairs_match_closed_form() {
    let c = cache(1);
    let p = TwoLevelParams::spanning(1.3, 12.0, 3.0).unwrap();
    for i in 0..=30 {
        let t = p.duration * i as f64 / 30.0;
        let delta = p.detuning(t);
        let generic = lowest_eigenpairs(&c, HamiltonianParams::new(p.rabi, delta).unwrap(), 2, &[]).unwrap();
        let analytic = analytic_eigenstates(&p, t).unwrap();
        for k in 0..2 {
            // The single-atom Hamiltonian is the two-level one shifted by −Δ/2.
            assert!((generic.values[k] - (analytic[k].energy - 0.5 * delta)).abs() < 1e-12);
            let overlap: f64 = generic.vectors[k].iter().zip(&analytic[k].vector).map(|(a, b)| a * b).sum();
            assert!((overlap.abs() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn resonant_two_level_coupling() {
    let c = cache(1);
    for (rabi, slope) in [(1.0, 10.0), (2.5, 3.0)] {
        let rates = ControlPoint {
            rabi: 0.0,
            detuning: slope,
        };
        let value = nonadiabatic_coupling(&c, HamiltonianParams::new(rabi, 0.0).unwrap(), rates, 0, 1).unwrap();
        assert!((value.abs() - slope / (4.0 * rabi)).abs() < 1e-12);
    }
}

#[test]
fn coupling_matches_finite_difference_of_eigenvectors() {
    let c = cache(4);
    let s = standard_schedule();
    let t = 1.1;
    let h = 1e-5;
    let at = |t: f64| lowest_eigenpairs(&c, s.controls(t).params(), 3, &[]).unwrap();
    let (here, ahead, behind) = (at(t), at(t + h), at(t - h));
    let aligned = |v: &[f64], reference: &[f64]| {
        let sign = v.iter().zip(reference).map(|(a, b)| a * b).sum::<f64>().signum();
        v.iter().map(|x| x * sign).collect::<Vec<_>>()
    };
    for (m, n) in [(0, 1), (0, 2), (1, 2)] {
        let plus = aligned(&ahead.vectors[n], &here.vectors[n]);
        let minus = aligned(&behind.vectors[n], &here.vectors[n]);
        let fd: f64 = here.vectors[m]
            .iter()
            .zip(plus.iter().zip(&minus))
            .map(|(a, (p, q))| a * (p - q) / (2.0 * h))
            .sum();
        let exact = nonadiabatic_coupling(&c, s.controls(t).params(), s.rates(t), m, n).unwrap();
        assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "({m}, {n}): {fd} vs {exact}");
    }
}

#[test]
fn gap_minimum_is_insensitive_to_the_grid() {
    let c = cache(5);
    let s = standard_schedule();
    let coarse = gap_trace(&c, &s, 60, 0.15).unwrap();
    let fine = gap_trace(&c, &s, 300, 0.15).unwrap();
    assert!((coarse.min_gap - fine.min_gap).abs() < 1e-8);
    assert!((coarse.t_min - fine.t_min).abs() < 1e-5);
    assert!((coarse.slope - fine.slope).abs() < 1e-6 * fine.slope);
}

#[test]
fn even_chains_have_no_interior_gap_minimum() {
    let err = gap_trace(&cache(6), &standard_schedule(), 100, 0.15).unwrap_err();
    assert!(matches!(err, rydchain::Error::Config(_)), "{err}");
}
