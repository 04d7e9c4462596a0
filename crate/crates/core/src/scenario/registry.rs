use crate::error::Result;
use crate::fixtures;
use crate::maps::SmoothMapSpec;

use super::{Scenario, ScenarioStructure as S};

/// A built-in scenario.
pub struct RegistryEntry {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub description: &'static str,
    pub build: fn() -> Result<Scenario>,
}

const CONTACT_FORM_NOTE: &str =
    "M2 uses the contact form v^2 du + dw; the sign-flipped -v^2 du + dw is not metrically dual to xi";

/// The flat paracosymplectic structure is not contact, hence these fail.
const FLAT_CONTACT_FAILS: [&str; 3] = ["R3/paracontact-metric", "R3/para-sasakian", "R3/k-paracontact"];

fn swap(corrected: bool) -> Result<Scenario> {
    let (m1, m2, f) = fixtures::swap_example(corrected)?;
    let name = if corrected { "sasakian-swap" } else { "sasakian-swap-uncorrected" };
    let sc = Scenario::new(name, vec![S::Contact(m1), S::Contact(m2)])?.with_map(f, "M1", "M2", Some(1))?;
    Ok(if corrected {
        sc.note(CONTACT_FORM_NOTE)
    } else {
        sc.note("M2 uses the sign-flipped contact form -v^2 du + dw; its axiom checks are expected to fail")
            .expect_fail([
                "M2/almost-paracontact",
                "M2/compatible-metric",
                "M2/paracontact-metric",
                "M2/normal",
                "M2/para-sasakian",
                "M2/pq-identities",
                "M2/classification",
                "M2/phi-basis",
                "swap/paraholomorphic",
                "swap/lambda",
                "swap/pluriharmonic-obstruction",
            ])
    })
}

fn flat_paracosymplectic() -> Result<Scenario> {
    Ok(Scenario::new("flat-paracosymplectic", vec![S::Contact(fixtures::flat_paracosymplectic()?)])?
        .expect_fail(FLAT_CONTACT_FAILS))
}

fn flat_para_kahler() -> Result<Scenario> {
    Scenario::new("flat-para-kahler", vec![S::Hermitian(fixtures::flat_para_kahler(1.0)?)])
}

fn flat_para_kahler_scaled() -> Result<Scenario> {
    Scenario::new("flat-para-kahler-scaled", vec![S::Hermitian(fixtures::flat_para_kahler(4.0)?)])
}

fn perturbed_para_hermitian() -> Result<Scenario> {
    let s = fixtures::perturbed_para_hermitian(&[0.3, -0.2, 0.15, 0.1, -0.25, 0.05])?;
    Ok(Scenario::new("perturbed-para-hermitian", vec![S::Hermitian(s)])?
        .note("J and h are conjugated by a unipotent polynomial frame change; J is not parallel")
        .expect_fail(["P4/para-kahler"]))
}

fn projection() -> Result<Scenario> {
    let (s, n, f) = fixtures::projection()?;
    Ok(Scenario::new("projection-fixture", vec![S::Contact(s), S::Hermitian(n)])?
        .with_map(f, "R3", "P2", Some(1))?
        .expect_fail(FLAT_CONTACT_FAILS))
}

fn identity_m1() -> Result<Scenario> {
    let m1 = fixtures::m1()?;
    let c = m1.chart().clone();
    let f = SmoothMapSpec::parse("identity", &c, &c, &["x", "y", "z"])?;
    Scenario::new("identity-M1", vec![S::Contact(m1)])?.with_map(f, "M1", "M1", Some(1))
}

fn shifted_swap() -> Result<Scenario> {
    let (m1, m2, f) = fixtures::shifted_swap()?;
    Ok(Scenario::new("shifted-swap", vec![S::Contact(m1), S::Contact(m2)])?
        .with_map(f, "M1", "M2", Some(1))?
        .note("the shift moves the v^2 entry of phi2 off x^2, so the map does not intertwine phi1 and phi2")
        .expect_fail([
            "shifted-swap/paraholomorphic",
            "shifted-swap/lambda",
            "shifted-swap/xi-orthogonal-image",
            "shifted-swap/pluriharmonic-obstruction",
            "shifted-swap/tension-transfer",
            "shifted-swap/pointwise-transfer",
            "shifted-swap/harmonic",
            "shifted-swap/parapluriharmonic",
        ]))
}

fn inclusion() -> Result<Scenario> {
    let (n, s, f) = fixtures::inclusion()?;
    Ok(Scenario::new("inclusion-fixture", vec![S::Hermitian(n), S::Contact(s)])?
        .with_map(f, "P2", "R3", Some(1))?
        .expect_fail(FLAT_CONTACT_FAILS))
}

fn null_curve() -> Result<Scenario> {
    let (n, m1, f) = fixtures::null_curve_into_m1()?;
    Scenario::new("null-curve-into-M1", vec![S::Hermitian(n), S::Contact(m1)])?.with_map(f, "P2", "M1", Some(1))
}

fn m1_to_plane() -> Result<Scenario> {
    let (m1, n, f) = fixtures::m1_to_plane()?;
    Ok(Scenario::new("M1-to-para-kahler-plane", vec![S::Contact(m1), S::Hermitian(n)])?
        .with_map(f, "M1", "P2", Some(1))?
        .note("paraholomorphic and harmonic, but alpha(X, xi) = f_*(phi X) does not vanish")
        .expect_fail(["to-plane/parapluriharmonic"]))
}

fn perturbed_eta() -> Result<Scenario> {
    Ok(Scenario::new("perturbed-eta-M1", vec![S::Contact(fixtures::perturbed_eta_m1()?)])?
        .note("deliberately broken contact form: eta(xi) = 1 + y^2")
        .expect_fail([
            "M1-perturbed-eta/almost-paracontact",
            "M1-perturbed-eta/compatible-metric",
            "M1-perturbed-eta/paracontact-metric",
            "M1-perturbed-eta/normal",
            "M1-perturbed-eta/pq-identities",
            "M1-perturbed-eta/para-sasakian",
            "M1-perturbed-eta/classification",
            "M1-perturbed-eta/phi-basis",
        ]))
}

fn square_x() -> Result<Scenario> {
    let (s, f) = fixtures::square_x()?;
    Ok(Scenario::new("square-x", vec![S::Contact(s)])?
        .with_map(f, "R3", "R3", None)?
        .note("alpha(e1, e1) = 2 e1 while alpha(phi e1, phi e1) = 0")
        .expect_fail(FLAT_CONTACT_FAILS)
        .expect_fail(["square-x/parapluriharmonic", "square-x/harmonic"]))
}

pub fn registry() -> Vec<RegistryEntry> {
    vec![
        RegistryEntry {
            name: "sasakian-swap",
            aliases: &["paper-4.1"],
            description: "para-Sasakian M1 -> M2 under (x,y,z) -> (y,x,z), corrected contact form on M2",
            build: || swap(true),
        },
        RegistryEntry {
            name: "sasakian-swap-uncorrected",
            aliases: &["paper-4.1-as-printed"],
            description: "same as sasakian-swap with the sign-flipped contact form on M2",
            build: || swap(false),
        },
        RegistryEntry {
            name: "flat-paracosymplectic",
            aliases: &[],
            description: "constant structure on R3 with g = diag(1,-1,1)",
            build: flat_paracosymplectic,
        },
        RegistryEntry {
            name: "flat-para-kahler",
            aliases: &[],
            description: "constant para-Kaehler plane, h = diag(1,-1)",
            build: flat_para_kahler,
        },
        RegistryEntry {
            name: "flat-para-kahler-scaled",
            aliases: &[],
            description: "para-Kaehler plane with h = diag(4,-4)",
            build: flat_para_kahler_scaled,
        },
        RegistryEntry {
            name: "perturbed-para-hermitian",
            aliases: &[],
            description: "non-integrable almost para-Hermitian structure on a 4-box",
            build: perturbed_para_hermitian,
        },
        RegistryEntry {
            name: "projection-fixture",
            aliases: &["flat-paracosymplectic-to-parakahler"],
            description: "(x,y,z) -> (x,y) from the flat paracosymplectic R3 to the para-Kaehler plane",
            build: projection,
        },
        RegistryEntry {
            name: "identity-M1",
            aliases: &[],
            description: "identity map of M1",
            build: identity_m1,
        },
        RegistryEntry {
            name: "shifted-swap",
            aliases: &[],
            description: "(x,y,z) -> (y,x+1,z) from M1 to M2, not paraholomorphic",
            build: shifted_swap,
        },
        RegistryEntry {
            name: "inclusion-fixture",
            aliases: &[],
            description: "(u,v) -> (u,v,0) from the para-Kaehler plane into the flat paracosymplectic R3",
            build: inclusion,
        },
        RegistryEntry {
            name: "null-curve-into-M1",
            aliases: &[],
            description: "(u,v) -> null Legendre curve in M1 through (u+v)/4",
            build: null_curve,
        },
        RegistryEntry {
            name: "M1-to-para-kahler-plane",
            aliases: &[],
            description: "(x,y,z) -> (x^2+y^2, -2xy) from M1 to the para-Kaehler plane",
            build: m1_to_plane,
        },
        RegistryEntry {
            name: "perturbed-eta-M1",
            aliases: &[],
            description: "M1 with contact form x^2 dy + (1+y^2) dz, not normal",
            build: perturbed_eta,
        },
        RegistryEntry {
            name: "square-x",
            aliases: &[],
            description: "(x,y,z) -> (x^2,y,z) on the flat R3, not parapluriharmonic",
            build: square_x,
        },
    ]
}
