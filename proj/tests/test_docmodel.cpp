#include <doctest.h>

#include <string>
#include <vector>

#include "support/checks.hpp"
#include "support/testgen.hpp"
#include "vcache/digest.hpp"
#include "vcache/docmodel.hpp"
#include "vcache/error.hpp"

using namespace vcache;
using testsupport::thrown_kind;

TEST_SUITE("docmodel") {

TEST_CASE("parse_template: plain text is one literal") {
    TemplateDoc doc = parse_template("<p>hi</p>");
    REQUIRE(doc.nodes.size() == 1);
    CHECK(doc.nodes[0] == TNode::lit("<p>hi</p>"));
    CHECK(doc.literal_bytes == 9);
}

TEST_CASE("parse_template: gaps and loops map to the node tree") {
    TemplateDoc doc = parse_template("A<gap>B<loop><li><gap></loop>");
    std::vector<TNode> expected;
    expected.push_back(TNode::lit("A"));
    expected.push_back(TNode::gap());
    expected.push_back(TNode::lit("B"));
    expected.push_back(TNode::loop({TNode::lit("<li>"), TNode::gap()}));
    CHECK(doc == TemplateDoc::make(expected));
}

TEST_CASE("parse_template: unbalanced loops are rejected") {
    CHECK(thrown_kind([] { parse_template("<loop>x"); }) == ErrorKind::UnbalancedLoop);
    CHECK(thrown_kind([] { parse_template("x</loop>"); }) == ErrorKind::UnbalancedLoop);
    CHECK(thrown_kind([] { parse_template("<loop><loop>a</loop>"); }) == ErrorKind::UnbalancedLoop);
}

TEST_CASE("parse_template: binding-only constructs are rejected") {
    CHECK(thrown_kind([] { parse_template("a</gap>b"); }) == ErrorKind::StrayBindingToken);
    CHECK(thrown_kind([] { parse_template("<temp ref=\"/t\">"); }) == ErrorKind::StrayBindingToken);
    CHECK(thrown_kind([] { parse_template("a</temp>"); }) == ErrorKind::StrayBindingToken);
    CHECK(thrown_kind([] { parse_template("a<1>b</1>"); }) == ErrorKind::StrayBindingToken);
}

TEST_CASE("parse_template: near-miss tokens stay literal") {
    // Case-sensitive, byte-exact matching: anything less is plain text.
    for (const char* s : {"<GAP>", "<Gap>", "< gap>", "<gap >", "<gapp>", "<temp>", "<tempx", "<0>",
                          "<01>", "<1234567890>", "</0>", "<>", "<-1>"}) {
        TemplateDoc doc = parse_template(s);
        REQUIRE(doc.nodes.size() == 1);
        CHECK(doc.nodes[0].kind == TNode::Kind::Literal);
    }
}

TEST_CASE("parse_binding: single fill") {
    BindingDoc doc = parse_binding("<temp ref=\"/tpl/ab.vct\"><gap>x</gap></temp>");
    CHECK(doc.ref == "/tpl/ab.vct");
    REQUIRE(doc.items.size() == 1);
    REQUIRE(doc.items[0].kind == BItem::Kind::Fill);
    REQUIRE(doc.items[0].fill.size() == 1);
    CHECK(doc.items[0].fill[0].literal == "x");
    CHECK_FALSE(doc.items[0].fill[0].is_nested());
}

TEST_CASE("parse_binding: loop runs") {
    BindingDoc doc = parse_binding("<temp ref=\"/t\"><loop><1><gap>a</gap></1><2><gap>b</gap></2></loop></temp>");
    REQUIRE(doc.items.size() == 1);
    REQUIRE(doc.items[0].kind == BItem::Kind::Runs);
    REQUIRE(doc.items[0].runs.size() == 2);
    REQUIRE(doc.items[0].runs[0].size() == 1);
    CHECK(doc.items[0].runs[0][0].kind == BItem::Kind::Fill);
    CHECK(doc.items[0].runs[1][0].fill[0].literal == "b");
}

TEST_CASE("parse_binding: nested binding inside a fill") {
    BindingDoc doc = parse_binding(
        "<temp ref=\"/t1\"><gap>pre<temp ref=\"/t2\"><gap>z</gap></temp>post</gap></temp>");
    REQUIRE(doc.items.size() == 1);
    REQUIRE(doc.items[0].fill.size() == 3);
    CHECK(doc.items[0].fill[0].literal == "pre");
    REQUIRE(doc.items[0].fill[1].is_nested());
    CHECK(doc.items[0].fill[1].nested->ref == "/t2");
    CHECK(doc.items[0].fill[2].literal == "post");
}

TEST_CASE("parse_binding: run numbering must be consecutive from 1") {
    CHECK(thrown_kind([] {
              parse_binding("<temp ref=\"/t\"><loop><1>x</1><3>y</3></loop></temp>");
          }) == ErrorKind::NonConsecutiveRuns);
    CHECK(thrown_kind([] {
              parse_binding("<temp ref=\"/t\"><loop><2>x</2></loop></temp>");
          }) == ErrorKind::NonConsecutiveRuns);
}

TEST_CASE("parse_binding: malformed wires") {
    CHECK(thrown_kind([] { parse_binding("plain"); }) == ErrorKind::MissingOuterTemp);
    CHECK(thrown_kind([] { parse_binding(""); }) == ErrorKind::MissingOuterTemp);
    CHECK(thrown_kind([] { parse_binding("<gap>x</gap>"); }) == ErrorKind::MissingOuterTemp);
    // a void gap marker has no place inside a binding
    CHECK(thrown_kind([] { parse_binding("<temp ref=\"/t\"><gap></temp>"); }) == ErrorKind::BareGapMarker);
    CHECK(thrown_kind([] { parse_binding("<temp ref=\"/t\"><gap><gap>x</gap></gap></temp>"); }) ==
          ErrorKind::BareGapMarker);
    CHECK(thrown_kind([] { parse_binding("<temp ref=\"/t\"><gap>x</gap>"); }) == ErrorKind::UnbalancedTag);
    CHECK(thrown_kind([] { parse_binding("<temp ref=\"/t\">loose</temp>"); }) == ErrorKind::UnbalancedTag);
    CHECK(thrown_kind([] { parse_binding("<temp ref=\"/t\"><loop>x</loop></temp>"); }) ==
          ErrorKind::UnbalancedTag);
}

TEST_CASE("parse_binding: exactly one outer block") {
    CHECK(thrown_kind([] {
              parse_binding("<temp ref=\"/a\"></temp><temp ref=\"/b\"></temp>");
          }) == ErrorKind::UnbalancedTag);
}

TEST_CASE("serialize: canonical forms") {
    CHECK(serialize(TemplateDoc::make({TNode::gap()})) == "<gap>");
    BindingDoc empty_fill;
    empty_fill.ref = "/t";
    empty_fill.items.push_back(BItem::make_fill({}));
    CHECK(serialize(empty_fill) == "<temp ref=\"/t\"><gap></gap></temp>");

    BindingDoc zero_runs;
    zero_runs.ref = "/t";
    zero_runs.items.push_back(BItem::make_runs({}));
    CHECK(serialize(zero_runs) == "<temp ref=\"/t\"><loop></loop></temp>");
    CHECK(parse_binding(serialize(zero_runs)) == zero_runs);
}

TEST_CASE("round-trip: random trees in both directions") {
    testsupport::Rng rng{7};
    for (int i = 0; i < 300; ++i) {
        TemplateDoc t = testsupport::random_template_doc(rng);
        std::string wire = serialize(t);
        CHECK(parse_template(wire) == t);
        CHECK(serialize(parse_template(wire)) == wire);

        BindingDoc b = testsupport::random_binding_doc(rng);
        std::string bwire = serialize(b);
        CHECK(parse_binding(bwire) == b);
        CHECK(serialize(parse_binding(bwire)) == bwire);
    }
}

TEST_CASE("escape_reserved: examples") {
    CHECK(escape_reserved("plain <b>text</b>") == "plain <b>text</b>");
    CHECK(escape_reserved("use <gap> here") == "use &lt;gap> here");
    CHECK(escape_reserved("") == "");
}

TEST_CASE("escape_reserved: every reserved token is defused") {
    for (const char* tok : {"<gap>", "</gap>", "<loop>", "</loop>", "<temp ", "</temp>", "<1>",
                            "</1>", "<42>", "</907>"}) {
        std::string input = std::string("x") + tok + "y";
        std::string expect = std::string("x&lt;") + (tok + 1) + "y";
        CHECK(escape_reserved(input) == expect);
        CHECK(token_free(escape_reserved(input)));
    }
    // non-tokens pass through untouched
    CHECK(escape_reserved("<gapp> <0> <01> </temp") == "<gapp> <0> <01> </temp");
}

TEST_CASE("escape_reserved: idempotent and token-free on random strings") {
    testsupport::Rng rng{11};
    for (int i = 0; i < 500; ++i) {
        std::string s = rng.raw_text(48);
        std::string once = escape_reserved(s);
        CHECK(token_free(once));
        CHECK(escape_reserved(once) == once);
    }
}

TEST_CASE("normalization: adjacent literals merge, empties vanish") {
    std::vector<TNode> nodes;
    append_node(nodes, TNode::lit("a"));
    append_node(nodes, TNode::lit("b"));
    append_node(nodes, TNode::lit(""));
    append_node(nodes, TNode::gap());
    append_node(nodes, TNode::lit(""));
    REQUIRE(nodes.size() == 2);
    CHECK(nodes[0] == TNode::lit("ab"));
    CHECK(nodes[1] == TNode::gap());

    TemplateDoc doc = TemplateDoc::make({TNode::lit("a"), TNode::lit("b"), TNode::loop({TNode::lit("c"), TNode::lit("d")})});
    REQUIRE(doc.nodes.size() == 2);
    CHECK(doc.nodes[0] == TNode::lit("ab"));
    CHECK(doc.nodes[1].body.size() == 1);
}

TEST_CASE("literal_bytes is recomputable and survives round-trips") {
    testsupport::Rng rng{13};
    for (int i = 0; i < 200; ++i) {
        TemplateDoc t = testsupport::random_template_doc(rng);
        CHECK(t.literal_bytes == count_literal_bytes(t.nodes));
        CHECK(parse_template(serialize(t)).literal_bytes == t.literal_bytes);
    }
}

TEST_CASE("template identity is content-addressed") {
    TemplateDoc a = TemplateDoc::make({TNode::lit("same"), TNode::gap()});
    TemplateDoc b = parse_template("same<gap>");
    TemplateId ia = template_id(a);
    TemplateId ib = template_id(b);
    CHECK(ia == ib);
    REQUIRE(ia.hash.size() == 16);
    for (char c : ia.hash) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
    CHECK(ia.url == "/tpl/" + ia.hash + ".vct");
    CHECK(ia.hash == short_sha256_hex(serialize(a)).substr(0, 16));
    CHECK(template_id(TemplateDoc::make({TNode::lit("other")})).hash != ia.hash);
}

TEST_CASE("template url shape") {
    CHECK(template_url_for_hash("0123456789abcdef") == "/tpl/0123456789abcdef.vct");
    CHECK(hash_from_template_url("/tpl/0123456789abcdef.vct") == "0123456789abcdef");
    CHECK(hash_from_template_url("/tpl/0123456789abcdef.txt") == "");
    CHECK(hash_from_template_url("/doc/page") == "");
    CHECK(hash_from_template_url("/tpl/XYZ.vct") == "");
    CHECK(hash_from_template_url("/tpl/0123.vct") == "");
}

}  // TEST_SUITE
