use mhd_core::mesh::Mesh;
use mhd_core::vec3;
use mhd_core::Error;

fn unit_square(n: usize) -> Mesh {
    Mesh::structured(2, &[n, n], &[0.0, 0.0], &[1.0, 1.0]).unwrap()
}

#[test]
fn smallest_square_has_two_triangles() {
    let m = unit_square(1);
    assert_eq!(m.num_cells(), 2);
    assert_eq!(m.num_vertices(), 4);
    let interior: Vec<_> = m.interior_facets().collect();
    assert_eq!(interior.len(), 1);
    // the diagonal from (0,0) to (1,1)
    let n = interior[0].1.normal;
    assert!(vec3::dot(&n, &[1.0, 1.0, 0.0]).abs() < 1e-15);
}

#[test]
fn two_by_two_square_facet_counts() {
    let m = unit_square(2);
    // Euler: F = 3T/2 + boundary/2 with T = 8, 8 boundary segments
    assert_eq!(m.facets().len(), 16);
    assert_eq!(m.interior_facets().count(), 8);
    assert_eq!(m.boundary_facets().count(), 8);
}

#[test]
fn kuhn_cube_counts_and_volume() {
    let m = Mesh::structured(3, &[2, 2, 2], &[-1.0; 3], &[1.0; 3]).unwrap();
    assert_eq!(m.num_cells(), 48);
    let vol: f64 = (0..m.num_cells()).map(|c| m.volume(c)).sum();
    assert!((vol - 8.0).abs() < 1e-12);
    assert!((m.max_diameter() - 3f64.sqrt()).abs() < 1e-14);
    let fine = Mesh::structured(3, &[4, 4, 4], &[-1.0; 3], &[1.0; 3]).unwrap();
    assert_eq!(fine.num_cells(), 384);
    assert!((fine.max_diameter() - 3f64.sqrt() / 2.0).abs() < 1e-14);
}

#[test]
fn interior_facets_have_two_cells_and_positive_volumes() {
    for m in [
        unit_square(3),
        Mesh::structured(3, &[2, 3, 1], &[0.0; 3], &[1.0, 2.0, 0.5]).unwrap(),
    ] {
        for f in m.facets() {
            if let Some(c1) = f.c1 {
                assert!(f.c0 < c1);
            }
            assert!((vec3::norm(&f.normal) - 1.0).abs() < 1e-14);
        }
        for c in 0..m.num_cells() {
            assert!(m.volume(c) > 0.0);
        }
        let total: f64 = (0..m.num_cells()).map(|c| m.volume(c)).sum();
        assert!((total - m.total_volume()).abs() < 1e-12 * total);
    }
}

#[test]
fn normals_point_from_first_to_second_cell() {
    let m = Mesh::structured(3, &[2, 2, 2], &[0.0; 3], &[1.0; 3]).unwrap();
    for (_, f) in m.interior_facets() {
        let d = vec3::sub(&m.geometry(f.c1.unwrap()).centroid, &m.geometry(f.c0).centroid);
        assert!(vec3::dot(&d, &f.normal) > 0.0);
    }
    for (_, f) in m.boundary_facets() {
        let d = vec3::sub(&f.centroid, &m.geometry(f.c0).centroid);
        assert!(vec3::dot(&d, &f.normal) > 0.0);
    }
}

#[test]
fn closed_boundary_integrates_normal_to_zero() {
    for m in [unit_square(3), Mesh::structured(3, &[2, 2, 2], &[-1.0; 3], &[1.0; 3]).unwrap()] {
        let mut s = [0.0; 3];
        for (_, f) in m.boundary_facets() {
            vec3::axpy(f.measure, &f.normal, &mut s);
        }
        assert!(vec3::norm(&s) < 1e-13);
    }
}

#[test]
fn divergence_theorem_on_every_cell() {
    // v(x) = M x + c with a fixed non-symmetric M
    let mm = [[1.0, 2.0, -0.5], [0.3, -1.2, 0.7], [2.0, 0.1, 0.4]];
    let c = [0.2, -0.1, 0.3];
    for m in [unit_square(3), Mesh::structured(3, &[2, 1, 2], &[0.0; 3], &[1.0; 3]).unwrap()] {
        let dim = m.dim();
        let div: f64 = (0..dim).map(|i| mm[i][i]).sum();
        for cell in 0..m.num_cells() {
            let mut flux = 0.0;
            for &f in m.cell_facets(cell) {
                let facet = m.facet(f);
                let sign = if facet.c0 == cell { 1.0 } else { -1.0 };
                let mut v = vec3::add(&vec3::mat_vec(&mm, &facet.centroid), &c);
                v[2] *= if dim == 2 { 0.0 } else { 1.0 };
                flux += sign * facet.measure * vec3::dot(&v, &facet.normal);
            }
            assert!((flux - div * m.volume(cell)).abs() < 1e-12);
        }
    }
}

#[test]
fn construction_is_deterministic() {
    let a = Mesh::structured(3, &[2, 2, 2], &[0.0; 3], &[1.0; 3]).unwrap();
    let b = Mesh::structured(3, &[2, 2, 2], &[0.0; 3], &[1.0; 3]).unwrap();
    assert_eq!(a.vertices(), b.vertices());
    for c in 0..a.num_cells() {
        assert_eq!(a.cell(c), b.cell(c));
    }
    let fa: Vec<_> = a.facets().iter().map(|f| (f.vertices.clone(), f.c0, f.c1)).collect();
    let fb: Vec<_> = b.facets().iter().map(|f| (f.vertices.clone(), f.c0, f.c1)).collect();
    assert_eq!(fa, fb);
    // sorted by vertex tuple
    assert!(fa.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn invalid_inputs_are_config_errors() {
    assert!(matches!(
        Mesh::structured(2, &[0, 1], &[0.0, 0.0], &[1.0, 1.0]),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        Mesh::structured(2, &[1, 1], &[0.0, 1.0], &[1.0, 1.0]),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        Mesh::structured(4, &[1; 4], &[0.0; 4], &[1.0; 4]),
        Err(Error::Config(_))
    ));
}
