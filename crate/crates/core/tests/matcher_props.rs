use std::cmp::Reverse;

use mutual_assist::matcher::{evaluate_all, ServiceForm};
use mutual_assist::{
    match_request, rank_matches, ConceptId, MatchDegree, ServiceAdvertisement, ServiceRequest, Taxonomy,
};
use proptest::prelude::*;

fn concept() -> impl Strategy<Value = ConceptId> {
    let names: Vec<ConceptId> = Taxonomy::builtin().concepts().to_vec();
    prop::sample::select(names)
}

fn location() -> impl Strategy<Value = Option<String>> {
    prop::option::of(prop::sample::select(vec![
        "Middelheim Park".to_string(),
        "  middelheim   PARK ".to_string(),
        "Home".to_string(),
        "day centre".to_string(),
    ]))
}

fn form() -> impl Strategy<Value = ServiceForm> {
    prop::sample::select(vec![ServiceForm::Provided, ServiceForm::ParticipantSeeking])
}

fn threshold() -> impl Strategy<Value = MatchDegree> {
    prop::sample::select(vec![MatchDegree::Exact, MatchDegree::Subsume, MatchDegree::PlugIn])
}

prop_compose! {
    fn request()(
        provider in concept(), ty in concept(), location in location(),
        deadline in prop::option::of(0i64..20), form in form(),
        min_p in threshold(), min_t in threshold(),
    ) -> ServiceRequest {
        ServiceRequest {
            id: "r".into(),
            wanted_provider_class: provider,
            wanted_service_type: ty,
            location,
            deadline,
            form,
            min_provider_degree: min_p,
            min_type_degree: min_t,
        }
    }
}

prop_compose! {
    fn advert(id: String)(
        provider in concept(), ty in concept(), location in location(),
        deadline in prop::option::of(0i64..20), form in form(),
    ) -> ServiceAdvertisement {
        ServiceAdvertisement { id: id.clone(), provider_class: provider, service_type: ty, location, deadline, form }
    }
}

fn adverts() -> impl Strategy<Value = Vec<ServiceAdvertisement>> {
    (0usize..8).prop_flat_map(|n| (0..n).map(|i| advert(format!("adv{i:02}"))).collect::<Vec<_>>())
}

fn rank(d: MatchDegree) -> u8 {
    match d {
        MatchDegree::Exact => 3,
        MatchDegree::Subsume => 2,
        MatchDegree::PlugIn => 1,
        MatchDegree::Fail => 0,
    }
}

#[test]
fn worked_example_from_the_playground() {
    let t = Taxonomy::builtin();
    let req: ServiceRequest = serde_json::from_str(
        r#"{"id":"r","wanted_provider_class":"informal_provider","wanted_service_type":"indoor_service",
            "min_provider_degree":"exact","min_type_degree":"subsume"}"#,
    )
    .unwrap();
    let adv: ServiceAdvertisement = serde_json::from_str(
        r#"{"id":"a","provider_class":"informal_provider","service_type":"entertainment"}"#,
    )
    .unwrap();
    let v = match_request(&t, &req, &adv, 0).unwrap();
    assert_eq!(v.provider_degree, MatchDegree::Exact);
    assert_eq!(v.type_degree, MatchDegree::Subsume);
    assert!(v.overall);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn overall_is_the_conjunction_of_facets(req in request(), adv in advert("a".into()), now in 0i64..20) {
        let t = Taxonomy::builtin();
        let v = match_request(&t, &req, &adv, now).unwrap();
        let expect = rank(v.provider_degree) >= rank(req.min_provider_degree)
            && rank(v.type_degree) >= rank(req.min_type_degree)
            && v.location_ok && v.deadline_ok && v.form_ok;
        prop_assert_eq!(v.overall, expect);
        prop_assert_eq!(v.form_ok, req.form == adv.form);
        let deadline_ok = req.deadline.is_none_or(|d| d >= now) && adv.deadline.is_none_or(|d| d >= now);
        prop_assert_eq!(v.deadline_ok, deadline_ok);
        prop_assert_eq!(v.provider_degree, t.match_concepts(&req.wanted_provider_class, &adv.provider_class).unwrap());
        prop_assert_eq!(v.type_degree, t.match_concepts(&req.wanted_service_type, &adv.service_type).unwrap());
    }

    /// Changing one facet of the advert leaves every other facet's result alone.
    #[test]
    fn facets_are_independent(
        req in request(), adv in advert("a".into()), other in advert("a".into()), now in 0i64..20,
    ) {
        let t = Taxonomy::builtin();
        let base = match_request(&t, &req, &adv, now).unwrap();

        let mut a = adv.clone();
        a.location = other.location.clone();
        let v = match_request(&t, &req, &a, now).unwrap();
        prop_assert_eq!((v.provider_degree, v.type_degree, v.deadline_ok, v.form_ok),
                        (base.provider_degree, base.type_degree, base.deadline_ok, base.form_ok));

        let mut a = adv.clone();
        a.service_type = other.service_type.clone();
        let v = match_request(&t, &req, &a, now).unwrap();
        prop_assert_eq!((v.provider_degree, v.location_ok, v.deadline_ok, v.form_ok),
                        (base.provider_degree, base.location_ok, base.deadline_ok, base.form_ok));

        let mut a = adv.clone();
        a.provider_class = other.provider_class.clone();
        let v = match_request(&t, &req, &a, now).unwrap();
        prop_assert_eq!((v.type_degree, v.location_ok, v.deadline_ok, v.form_ok),
                        (base.type_degree, base.location_ok, base.deadline_ok, base.form_ok));

        let mut a = adv.clone();
        a.deadline = other.deadline;
        a.form = other.form;
        let v = match_request(&t, &req, &a, now).unwrap();
        prop_assert_eq!((v.provider_degree, v.type_degree, v.location_ok),
                        (base.provider_degree, base.type_degree, base.location_ok));
    }

    /// Lowering either threshold can only turn a rejection into an acceptance.
    #[test]
    fn thresholds_are_monotone(req in request(), adv in advert("a".into()), now in 0i64..20,
                               min_p in threshold(), min_t in threshold()) {
        let t = Taxonomy::builtin();
        let strict = match_request(&t, &req, &adv, now).unwrap();
        let mut relaxed_req = req.clone();
        relaxed_req.min_provider_degree = min_p.min(req.min_provider_degree);
        relaxed_req.min_type_degree = min_t.min(req.min_type_degree);
        let relaxed = match_request(&t, &relaxed_req, &adv, now).unwrap();
        prop_assert!(!strict.overall || relaxed.overall);
    }

    #[test]
    fn ranking_matches_brute_force_and_ignores_input_order(
        req in request(), ads in adverts(), now in 0i64..20, shuffle_seed in any::<u64>(),
    ) {
        let t = Taxonomy::builtin();
        // oracle: evaluate each advert, keep accepted ones, sort on an explicit key
        let mut expect: Vec<(Reverse<u8>, Reverse<u8>, String)> = ads
            .iter()
            .filter_map(|a| {
                let v = match_request(&t, &req, a, now).unwrap();
                v.overall.then(|| (Reverse(rank(v.type_degree)), Reverse(rank(v.provider_degree)), a.id.clone()))
            })
            .collect();
        expect.sort();
        let expect: Vec<String> = expect.into_iter().map(|k| k.2).collect();

        let got: Vec<String> = rank_matches(&t, &req, &ads, now).unwrap().into_iter().map(|(a, _)| a.id.clone()).collect();
        prop_assert_eq!(&got, &expect);

        let mut shuffled = ads.clone();
        let mut s = shuffle_seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let again: Vec<String> = rank_matches(&t, &req, &shuffled, now).unwrap().into_iter().map(|(a, _)| a.id.clone()).collect();
        prop_assert_eq!(&again, &expect);

        // the full report lists accepted adverts first, in the same order
        let all = evaluate_all(&t, &req, &ads, now).unwrap();
        prop_assert_eq!(all.len(), ads.len());
        let head: Vec<String> = all.iter().take(expect.len()).map(|(a, _)| a.id.clone()).collect();
        prop_assert_eq!(&head, &expect);
        prop_assert!(all[expect.len()..].iter().all(|(_, v)| !v.overall));
    }

    #[test]
    fn participant_offer_pairing_is_symmetric_on_shared_facets(a in request(), b in request(), now in 0i64..20) {
        let t = Taxonomy::builtin();
        let mut a = a;
        let mut b = b;
        for r in [&mut a, &mut b] {
            r.form = ServiceForm::ParticipantSeeking;
            r.wanted_provider_class = "participant".parse().unwrap();
        }
        let ab = match_request(&t, &a, &b.participant_offer(), now).unwrap();
        let ba = match_request(&t, &b, &a.participant_offer(), now).unwrap();
        prop_assert_eq!(ab.location_ok, ba.location_ok);
        prop_assert_eq!(ab.deadline_ok, ba.deadline_ok);
        prop_assert!(ab.form_ok && ba.form_ok);
        prop_assert_eq!(ab.provider_degree, MatchDegree::Exact);
        let mirrored = match ab.type_degree {
            MatchDegree::Subsume => MatchDegree::PlugIn,
            MatchDegree::PlugIn => MatchDegree::Subsume,
            d => d,
        };
        prop_assert_eq!(ba.type_degree, mirrored);
    }

    #[test]
    fn request_json_round_trips(req in request()) {
        let json = serde_json::to_string(&req).unwrap();
        let back: ServiceRequest = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, req);
    }
}
