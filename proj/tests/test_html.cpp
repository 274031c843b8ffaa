#include "wattless/html.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wattless::html;

namespace {

const Node& only_child(const Node& n)
{
    EXPECT_EQ(n.children.size(), 1u);
    return n.children.at(0);
}

std::string shape(const Node& n)
{
    std::string out;
    for (const auto& c : n.children) {
        if (c.kind == NodeKind::element) {
            out += "<" + c.tag + ">" + shape(c) + "</" + c.tag + ">";
        } else if (c.kind == NodeKind::text) {
            out += c.text;
        }
    }
    return out;
}

} // namespace

TEST(HtmlParse, SimpleParagraph)
{
    auto dom = parse_html("<p>hi</p>");
    const Node& p = only_child(dom);
    EXPECT_TRUE(p.is("p"));
    const Node& t = only_child(p);
    EXPECT_EQ(t.kind, NodeKind::text);
    EXPECT_EQ(t.text, "hi");
}

TEST(HtmlParse, VoidImageWithUnquotedAttribute)
{
    auto dom = parse_html("<img src=a.png>");
    const Node& img = only_child(dom);
    EXPECT_TRUE(img.is("img"));
    EXPECT_TRUE(img.children.empty());
    EXPECT_EQ(img.attribute_value("src"), "a.png");
    EXPECT_EQ(img.close, Close::none);
}

TEST(HtmlParse, ParagraphAutoClose)
{
    auto dom = parse_html("<div><p>a<p>b</div>");
    EXPECT_EQ(shape(dom), "<div><p>a</p><p>b</p></div>");
}

TEST(HtmlParse, ListItemsAndTableCellsAutoClose)
{
    EXPECT_EQ(shape(parse_html("<ul><li>a<li>b</ul>")), "<ul><li>a</li><li>b</li></ul>");
    EXPECT_EQ(shape(parse_html("<table><tr><td>1<td>2</table>")),
              "<table><tr><td>1</td><td>2</td></tr></table>");
}

TEST(HtmlParse, UnknownTagsAreElements)
{
    auto dom = parse_html("<my-widget x=1>t</my-widget>");
    EXPECT_TRUE(only_child(dom).is("my-widget"));
}

TEST(HtmlParse, AttributeOrderPreservedAndDuplicatesDropped)
{
    auto dom = parse_html("<a z=1 b=2 z=3 m>x</a>");
    const Node& a = only_child(dom);
    ASSERT_EQ(a.attributes.size(), 3u);
    EXPECT_EQ(a.attributes[0].name, "z");
    EXPECT_EQ(a.attributes[0].value, "1");
    EXPECT_EQ(a.attributes[1].name, "b");
    EXPECT_EQ(a.attributes[2].name, "m");
    EXPECT_FALSE(a.attributes[2].has_value);
}

TEST(HtmlParse, RawTextElementsDoNotNest)
{
    auto dom = parse_html("<script>if (a<b) { x = '</div>'; }</script><p>z</p>");
    ASSERT_EQ(dom.children.size(), 2u);
    EXPECT_TRUE(dom.children[0].is("script"));
    EXPECT_TRUE(dom.children[1].is("p"));
}

TEST(HtmlParse, BinaryInputIsSingleTextNode)
{
    std::string bin("\x89PNG\r\n\x1a\n\0\0\0\rIHDR", 16);
    auto dom = parse_html(bin);
    ASSERT_EQ(dom.children.size(), 1u);
    EXPECT_EQ(dom.children[0].kind, NodeKind::text);
    EXPECT_EQ(serialize(dom), bin);
}

TEST(HtmlSerialize, RoundtripsExactly)
{
    const char* samples[] = {
        "<!DOCTYPE html>\n<html><head><title>x &amp; y</title></head><body class=a>t</body></html>",
        "<div><p>a<p>b</div>",
        "<ul><li>one<li>two</ul></span></div>",
        "<svg viewBox='0 0 1 1'><path d='M0 0'/></svg>",
        "<!-- c --><?php x ?><![CDATA[y]]><br/><BR>",
        "<a href=\"x\"\n   data-y='z'>unterminated",
    };
    for (const char* s : samples) {
        EXPECT_EQ(serialize(parse_html(s)), s);
    }
}

TEST(HtmlSerialize, EditedAttributeRegeneratesStartTag)
{
    auto dom = parse_html("<img src=a.png alt='x'><p>t</p>");
    Node& img = dom.children[0];
    img.set_attribute("loading", "lazy");
    EXPECT_EQ(serialize(dom), "<img src=a.png alt='x' loading=\"lazy\"><p>t</p>");
}

TEST(HtmlEntities, Decode)
{
    EXPECT_EQ(decode_entities("a&amp;b&lt;&#65;&#x42;&nbsp;"), "a&b<AB\xC2\xA0");
    EXPECT_EQ(decode_entities("&bogus;"), "&bogus;");
}

TEST(HtmlParse, DeepNestingIsBounded)
{
    std::string s;
    for (int i = 0; i < 5000; ++i) {
        s += "<div>";
    }
    auto dom = parse_html(s);
    EXPECT_TRUE(check_invariants(dom));
    EXPECT_EQ(serialize(dom), s);
}

TEST(HtmlProperty, FuzzNeverCrashesAndKeepsInvariants)
{
    std::mt19937 rng(12345);
    const std::string alphabet = "<>/=\"' abcdpilmgsvyrt!-?&;#\n\0\x01\xff";
    const char* fragments[] = {"<p>", "</p>", "<div ", "<img src=", "<!--", "-->", "<script>", "</script>",
                               "<li>", "<table>", "<td>", "<svg>", "<path/>", "</", "<!DOCTYPE", "&amp;"};
    for (int iter = 0; iter < 10000; ++iter) {
        std::string s;
        int len = std::uniform_int_distribution<int>(0, 120)(rng);
        for (int i = 0; i < len; ++i) {
            if (rng() % 4 == 0) {
                s += fragments[rng() % std::size(fragments)];
            } else if (rng() % 8 == 0) {
                s.push_back(static_cast<char>(rng() & 0xff));
            } else {
                s.push_back(alphabet[rng() % alphabet.size()]);
            }
        }
        auto dom = parse_html(s);
        ASSERT_TRUE(check_invariants(dom)) << s;
        ASSERT_EQ(serialize(dom), s);
    }
}
