use promoai_core::convert::{powl_to_bpmn, powl_to_pn};
use promoai_core::pcl::run_pcl;
use promoai_core::serialize::{
    bpmn_export, bpmn_verify, emit_pcl, pnml_export, pnml_import, powl_json_export,
    powl_json_import,
};
use promoai_testkit::{random_model, rng, GenConfig};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pnml_roundtrip(seed in any::<u64>()) {
        let m = random_model(&mut rng(seed), GenConfig::default());
        let net = powl_to_pn(&m).unwrap();
        let xml = pnml_export(&net);
        prop_assert_eq!(pnml_import(&xml).unwrap(), net);
    }

    #[test]
    fn pcl_roundtrip_depth_four(seed in any::<u64>()) {
        let m = random_model(&mut rng(seed), GenConfig { max_depth: 4, ..GenConfig::default() });
        prop_assert_eq!(run_pcl(&emit_pcl(&m)).unwrap(), m);
    }

    #[test]
    fn json_roundtrip(seed in any::<u64>()) {
        let m = random_model(&mut rng(seed), GenConfig { max_depth: 4, ..GenConfig::default() });
        prop_assert_eq!(powl_json_import(&powl_json_export(&m)).unwrap(), m);
    }

    #[test]
    fn bpmn_documents_are_intact(seed in any::<u64>()) {
        let m = random_model(&mut rng(seed), GenConfig::default());
        let g = powl_to_bpmn(&m).unwrap();
        let summary = bpmn_verify(&bpmn_export(&g)).unwrap();
        prop_assert_eq!(summary.sequence_flows, g.flows.len());
        prop_assert_eq!(
            summary.tasks + summary.exclusive_gateways + summary.parallel_gateways + 2,
            g.nodes.len()
        );
    }
}

#[test]
fn exports_are_deterministic() {
    let m = random_model(&mut rng(11), GenConfig::default());
    let net = powl_to_pn(&m).unwrap();
    assert_eq!(pnml_export(&net), pnml_export(&powl_to_pn(&m).unwrap()));
    let g = powl_to_bpmn(&m).unwrap();
    assert_eq!(bpmn_export(&g), bpmn_export(&powl_to_bpmn(&m).unwrap()));
}
