use isoscope::baselines::{avg_cosine_similarity, partition_isotropy};
use isoscope::synth::{generate_gaussian, CloudSpec};

#[test]
fn gaussian_cosine_is_near_zero() {
    let c = generate_gaussian(&CloudSpec::isotropic(64, 5000, 3)).unwrap();
    let v = avg_cosine_similarity(&c, 100_000, 1).unwrap();
    assert!(v.abs() <= 0.02, "{v}");
}

#[test]
fn gaussian_partition_is_near_one() {
    let c = generate_gaussian(&CloudSpec::isotropic(10, 50_000, 4)).unwrap();
    let v = partition_isotropy(&c).unwrap();
    assert!((0.9..=1.0).contains(&v), "{v}");
}

#[test]
fn offset_cloud_is_anisotropic_by_cosine() {
    let mut spec = CloudSpec::isotropic(16, 2000, 5);
    spec.offset = Some(vec![5.0; 16]);
    let c = generate_gaussian(&spec).unwrap();
    assert!(avg_cosine_similarity(&c, 20_000, 0).unwrap() > 0.8);
}
