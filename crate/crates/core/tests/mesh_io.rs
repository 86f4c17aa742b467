use katolab::manifold::io::{parse_obj, parse_off, to_off};
use katolab::manifold::{
    build_sphere, build_torus_of_revolution, load_mesh, write_off, MeshFamily,
};
use katolab::Error;

#[test]
fn off_round_trip_preserves_geometry() {
    let mesh = build_torus_of_revolution(2.0, 1.0, 16).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("torus.off");
    write_off(&mesh, &path).unwrap();
    let back = load_mesh(&path, None).unwrap();
    assert_eq!(back.family(), MeshFamily::Loaded);
    assert_eq!(back.vertex_count(), mesh.vertex_count());
    assert_eq!(back.euler_characteristic(), 0);
    assert_eq!(back.first_betti_number(), 2);
    assert!((back.total_area() - mesh.total_area()).abs() < 1e-9 * mesh.total_area());
    assert!(back.gauss_bonnet_residual() < 1e-8);
}

#[test]
fn obj_file_loads_by_extension() {
    let mesh = build_sphere(1.0, 1).unwrap();
    let mut text = String::new();
    for v in mesh.vertices() {
        text.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
    }
    for f in mesh.faces() {
        text.push_str(&format!("f {}/1 {}/1 {}/1\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.obj");
    std::fs::write(&path, text).unwrap();
    let back = load_mesh(&path, None).unwrap();
    assert_eq!(back.euler_characteristic(), 2);
    assert_eq!(back.face_count(), mesh.face_count());
}

#[test]
fn malformed_inputs_are_reported() {
    assert!(matches!(
        parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n"),
        Err(Error::Parse { .. })
    ));
    assert!(parse_obj("v 0 0 0\nf 1 2 x\n").is_err());
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_mesh(dir.path().join("missing.off"), None),
        Err(Error::Io(_))
    ));
    assert!(load_mesh(dir.path().join("mesh.stl"), None).is_err());
}

#[test]
fn open_mesh_rejected_on_load() {
    // a single triangle: three boundary edges in one cycle
    let text = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.off");
    std::fs::write(&path, text).unwrap();
    match load_mesh(&path, None) {
        Err(Error::BoundaryEdges { count, cycles }) => {
            assert_eq!(count, 3);
            assert_eq!(cycles.len(), 1);
        }
        other => panic!("expected boundary error, got {other:?}"),
    }
    assert!(to_off(&build_sphere(1.0, 1).unwrap()).starts_with("OFF"));
}
