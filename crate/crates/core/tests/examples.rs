//! Every example runs to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));

            #[test]
            fn runs() {
                run_example().unwrap();
            }
        }
    };
}

example!(case_study);
example!(power_meter);
example!(protocol_round_trip);
example!(keypad_config);
example!(link_latency);
example!(scheduler);
example!(live_session);
