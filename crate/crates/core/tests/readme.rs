use ecoscapes::config::{parse_config, Config};

#[test]
fn documented_defaults_match_code() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```toml\n").expect("toml block") + "```toml\n".len();
    let block = &readme[start..start + readme[start..].find("```").unwrap()];
    let parsed = parse_config(block, &|_| None).unwrap();
    assert_eq!(parsed, Config::default());
}
