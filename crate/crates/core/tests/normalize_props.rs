mod common;

use proptest::prelude::*;
use sofix::normalize::{common_indent, normalize_snippet};

proptest! {
    #[test]
    fn shared_prefix_is_removed_and_relative_indent_kept(seed in any::<u64>()) {
        let fx = common::indent_fixture(seed);
        let out = normalize_snippet(&fx.input);
        prop_assert_eq!(&out.content, &fx.expected);
        prop_assert_eq!(&out.removed_prefix, &fx.prefix);
    }

    #[test]
    fn normalizing_twice_changes_nothing(seed in any::<u64>()) {
        let once = normalize_snippet(&common::indent_fixture(seed).input);
        let twice = normalize_snippet(&once.content);
        prop_assert_eq!(&twice.content, &once.content);
        prop_assert_eq!(twice.removed_prefix, "");
    }

    #[test]
    fn arbitrary_text_is_idempotent(text in "[ \t\x0b\x0c\r\na-c\u{a0}é#:]{0,80}") {
        let once = normalize_snippet(&text).content;
        prop_assert_eq!(normalize_snippet(&once).content, once);
    }

    #[test]
    fn line_count_is_preserved(seed in any::<u64>()) {
        let fx = common::indent_fixture(seed);
        let out = normalize_snippet(&fx.input);
        prop_assert_eq!(out.content.split('\n').count(), fx.expected.split('\n').count());
    }
}

#[test]
fn mixed_tabs_and_spaces_are_not_merged() {
    assert_eq!(common_indent(&["\t  a", "\t\tb"]), "\t");
    let out = normalize_snippet("  \tif x:\n  \t    y\n");
    assert_eq!(out.content, "if x:\n    y\n");
    assert_eq!(normalize_snippet(" \ta\n\t b").content, " \ta\n\t b");
}

#[test]
fn unicode_spaces_are_content() {
    let out = normalize_snippet("\u{a0}  x\n\u{a0}  y");
    assert_eq!(out.removed_prefix, "");
    assert_eq!(out.content, "\u{a0}  x\n\u{a0}  y");
}
