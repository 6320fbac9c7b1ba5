mod common;

use dmr::encoder::stub::StubServer;
use dmr::encoder::{DualEncoderModel, Embedder, HashEncoderConfig, RemoteEmbedder};
use dmr::harness::{build_embedder, evaluate, ingest, EncoderKind, EvalConfig};

#[test]
fn remote_eval_equals_in_process() {
    let config = HashEncoderConfig::default();
    // a freshly initialized model has tied heads, so one endpoint serves both
    let model = DualEncoderModel::init(&config).unwrap();
    let served = model.clone();
    let server = StubServer::start(config.proj_dim, move |_, text| {
        served
            .encode_query(text)
            .map(|v| v.values().to_vec())
            .map_err(|e| e.to_string())
    })
    .unwrap();

    let corpus = ingest(&common::fixture_corpus()).unwrap();
    let local_cfg = EvalConfig::default();
    let mut remote_cfg = local_cfg.clone();
    remote_cfg.encoder.kind = EncoderKind::Remote;
    remote_cfg.encoder.endpoint = Some(server.endpoint());

    let local = evaluate(&corpus, &model, &local_cfg, None).unwrap();
    let remote_embedder = build_embedder(&remote_cfg, None).unwrap();
    let remote = evaluate(&corpus, remote_embedder.as_ref(), &remote_cfg, None).unwrap();
    assert_eq!(local.per_split, remote.per_split);
    assert_eq!(local.overall, remote.overall);

    let texts = ["click the search button", "<a uid=\"x\">hotels</a>"];
    let r = RemoteEmbedder::connect(&server.endpoint()).unwrap();
    assert_eq!(r.embed_candidates(&texts).unwrap(), model.embed_candidates(&texts).unwrap());
}

#[test]
fn remote_info_dim_matches_vectors() {
    let server = StubServer::hashing(48).unwrap();
    let r = RemoteEmbedder::connect(&server.endpoint()).unwrap();
    assert_eq!(r.dim(), 48);
    let mut rng = common::rng(4);
    for n in 1..20 {
        let texts: Vec<String> = (0..n).map(|i| format!("t{i} {}", rand::RngExt::random_range(&mut rng, 0..99))).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let out = r.embed(&refs).unwrap();
        assert_eq!(out.len(), n);
        assert!(out.iter().all(|v| v.dim() == 48));
        assert_eq!(out, r.embed(&refs).unwrap());
    }
}
