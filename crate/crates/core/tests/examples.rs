// Every example must run to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().unwrap();
            }
        }
    };
}

example!(bandit_region);
example!(counterexample);
example!(generate_and_solve);
example!(winrate_gap);
example!(variance_preference);
example!(search_match);
example!(elo_fit);
