use std::ffi::{CStr, CString};
use std::ptr;

use vaa_core::latent::IdealModel;
use vaa_core::ReactionMatrix;
use vaa_ffi::*;

struct Fixture {
    _dir: tempfile::TempDir,
    model: CString,
    candidates: CString,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let model = IdealModel::new(
        ids.clone(),
        vec![0.0, 0.3, -0.4],
        vec![[1.5, 0.0], [0.0, 1.5], [1.0, 1.0]],
    )
    .unwrap();
    let model_path = dir.path().join("model.json");
    model.save(&model_path).unwrap();
    let values = [
        1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0,
    ];
    let matrix = ReactionMatrix::new(
        (0..5).map(|i| format!("cand{i}")).collect(),
        ids,
        values.iter().map(|&v| Some(v)).collect(),
    )
    .unwrap();
    let cand_path = dir.path().join("candidates.csv");
    matrix.write_csv(&cand_path).unwrap();
    Fixture {
        model: CString::new(model_path.to_str().unwrap()).unwrap(),
        candidates: CString::new(cand_path.to_str().unwrap()).unwrap(),
        _dir: dir,
    }
}

fn load(f: &Fixture) -> *mut VaaEngine {
    let mut engine = ptr::null_mut();
    let status = unsafe { vaa_engine_load(f.model.as_ptr(), f.candidates.as_ptr(), 15, &mut engine) };
    assert_eq!(status, VaaStatus::Ok);
    engine
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(vaa_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn full_questionnaire_through_the_c_interface() {
    let f = fixture();
    let engine = load(&f);
    unsafe {
        assert_eq!(vaa_engine_n_questions(engine), 3);
        assert_eq!(vaa_engine_n_candidates(engine), 5);
        assert_eq!(CStr::from_ptr(vaa_engine_question_id(engine, 1)).to_str().unwrap(), "b");
        assert_eq!(
            CStr::from_ptr(vaa_engine_candidate_id(engine, 4)).to_str().unwrap(),
            "cand4"
        );
        assert!(vaa_engine_question_id(engine, 3).is_null());

        let selector = CString::new("posterior_rmse").unwrap();
        let mut session = ptr::null_mut();
        assert_eq!(
            vaa_session_new(engine, selector.as_ptr(), 0, &mut session),
            VaaStatus::Ok
        );
        // The session keeps the engine alive.
        vaa_engine_free(engine);

        let truth = [1, 0, 1];
        let mut asked = Vec::new();
        loop {
            let mut q = usize::MAX;
            match vaa_session_next(session, &mut q) {
                VaaStatus::Ok => {
                    assert_eq!(vaa_session_answer(session, q, truth[q]), VaaStatus::Ok);
                    asked.push(q);
                }
                VaaStatus::Done => break,
                other => panic!("unexpected {other:?}: {}", last_error()),
            }
        }
        asked.sort();
        assert_eq!(asked, vec![0, 1, 2]);
        assert_eq!(vaa_session_n_answered(session), 3);

        let mut p = [0.0; 3];
        assert_eq!(vaa_session_predictive(session, p.as_mut_ptr(), 3), VaaStatus::Ok);
        assert!(p[0] > 0.5 && p[1] < 0.5 && p[2] > 0.5);

        let (mut c1, mut d1) = ([0usize; 2], [0.0; 2]);
        let (mut c2, mut d2) = ([0usize; 2], [0.0; 2]);
        assert_eq!(
            vaa_session_recommend(session, VaaRecType::I, 2, c1.as_mut_ptr(), d1.as_mut_ptr()),
            VaaStatus::Ok
        );
        assert_eq!(
            vaa_session_recommend(session, VaaRecType::II, 2, c2.as_mut_ptr(), d2.as_mut_ptr()),
            VaaStatus::Ok
        );
        // Candidate 0 answered exactly (1, 0, 1).
        assert_eq!(c1[0], 0);
        assert_eq!(d1[0], 0.0);
        assert_eq!(c1, c2);
        vaa_session_free(session);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let f = fixture();
    let engine = load(&f);
    unsafe {
        let bad = CString::new("best_first").unwrap();
        let mut session = ptr::null_mut();
        assert_eq!(
            vaa_session_new(engine, bad.as_ptr(), 0, &mut session),
            VaaStatus::UnknownSelector
        );
        assert!(last_error().contains("posterior_rmse"));
        assert!(session.is_null());

        let sel = CString::new("default_order").unwrap();
        assert_eq!(vaa_session_new(engine, sel.as_ptr(), 0, &mut session), VaaStatus::Ok);
        assert_eq!(vaa_session_answer(session, 0, 1), VaaStatus::Ok);
        assert_eq!(vaa_session_answer(session, 0, 0), VaaStatus::AlreadyAnswered);
        assert_eq!(vaa_session_skip(session, 0), VaaStatus::AlreadyAnswered);
        assert_eq!(vaa_session_answer(session, 9, 1), VaaStatus::UnknownQuestion);
        assert_eq!(vaa_session_skip(session, 1), VaaStatus::Ok);
        let mut q = 0;
        assert_eq!(vaa_session_next(session, &mut q), VaaStatus::Ok);
        assert_eq!(q, 2);

        let mut p = [0.0; 2];
        assert_eq!(
            vaa_session_predictive(session, p.as_mut_ptr(), 2),
            VaaStatus::InvalidInput
        );
        assert_eq!(vaa_session_next(ptr::null_mut(), &mut q), VaaStatus::NullArgument);
        assert_eq!(vaa_session_next(session, ptr::null_mut()), VaaStatus::NullArgument);
        let mut c = [0usize; 9];
        assert_eq!(
            vaa_session_recommend(session, VaaRecType::I, 9, c.as_mut_ptr(), ptr::null_mut()),
            VaaStatus::InvalidInput
        );

        let missing = CString::new("/nonexistent/model.json").unwrap();
        let mut other = ptr::null_mut();
        assert_eq!(
            vaa_engine_load(missing.as_ptr(), f.candidates.as_ptr(), 0, &mut other),
            VaaStatus::Io
        );
        assert_eq!(
            vaa_engine_load(ptr::null(), f.candidates.as_ptr(), 0, &mut other),
            VaaStatus::NullArgument
        );

        vaa_session_free(session);
        vaa_engine_free(engine);
        vaa_session_free(ptr::null_mut());
        vaa_engine_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/vaa.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 12);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from vaa.h");
    }
    assert!(header.contains("VAA_STATUS_ALREADY_ANSWERED = -4"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"vaa.h\"\nint main(void) {\n  VaaEngine *e = 0;\n  VaaStatus s = vaa_engine_load(\"m\", \"c\", 0, &e);\n  return s == VAA_STATUS_OK ? 0 : (int)VAA_REC_TYPE_II;\n}\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}
