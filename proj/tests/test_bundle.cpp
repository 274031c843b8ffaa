#include "wattless/bundle.hpp"

#include "support/temp_dir.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <unistd.h>

using namespace wattless;
using wattless::testing::TempDir;
namespace fs = std::filesystem;

namespace {

void put(const fs::path& root, const std::string& rel, const std::string& content)
{
    fs::create_directories((root / rel).parent_path());
    write_file(root / rel, content);
}

std::string png_bytes(std::size_t n)
{
    std::string s("\x89PNG\r\n\x1a\n", 8);
    s.resize(n, 'x');
    return s;
}

} // namespace

TEST(BundleLoad, TrivialEntry)
{
    TempDir d;
    put(d.path(), "index.html", "<p>hi</p>");
    auto b = load_bundle(d.path());
    EXPECT_EQ(b.assets.size(), 1u);
    EXPECT_TRUE(b.references.empty());
    EXPECT_EQ(b.entry_asset().cls, AssetClass::html);
}

TEST(BundleLoad, LocalAndExternal)
{
    TempDir d;
    put(d.path(), "index.html",
        "<link rel=stylesheet href=a.css><script src=\"https://cdn/x.js\"></script>");
    put(d.path(), "a.css", std::string(120, ' '));
    auto b = load_bundle(d.path());
    ASSERT_EQ(b.assets.size(), 3u);
    const Asset* css = b.find("a.css");
    ASSERT_NE(css, nullptr);
    EXPECT_FALSE(css->external);
    EXPECT_EQ(css->bytes, 120u);
    const Asset* js = b.find("https://cdn/x.js");
    ASSERT_NE(js, nullptr);
    EXPECT_TRUE(js->external);
    EXPECT_EQ(js->bytes, 0u);
    EXPECT_EQ(js->cls, AssetClass::script);
    EXPECT_EQ(b.references.size(), 2u);
}

TEST(BundleLoad, ImageClassAndBytes)
{
    TempDir d;
    put(d.path(), "index.html", "<img src=\"img/logo.png\">");
    put(d.path(), "img/logo.png", png_bytes(3456));
    auto b = load_bundle(d.path());
    const Asset* img = b.find("img/logo.png");
    ASSERT_NE(img, nullptr);
    EXPECT_EQ(img->cls, AssetClass::image);
    EXPECT_EQ(img->bytes, 3456u);
    EXPECT_EQ(image_format(*img), ImageFormat::png);
}

TEST(BundleLoad, SidecarBytesForExternal)
{
    TempDir d;
    put(d.path(), "index.html", "<script src=\"https://cdn/x.js\"></script><img src=missing.jpg>");
    put(d.path(), std::string(sidecar_manifest_name), "{\"https://cdn/x.js\": 5000, \"missing.jpg\": 7}");
    auto b = load_bundle(d.path());
    EXPECT_EQ(b.find("https://cdn/x.js")->bytes, 5000u);
    EXPECT_TRUE(b.find("missing.jpg")->external);
    EXPECT_EQ(b.find("missing.jpg")->bytes, 7u);
}

TEST(BundleLoad, CssReferencesResolveRelativeToStylesheet)
{
    TempDir d;
    put(d.path(), "index.html", "<link rel=stylesheet href=css/site.css>");
    put(d.path(), "css/site.css", "@font-face{src:url(../fonts/a.woff2)} .x{background:url(/img/b.png)}");
    put(d.path(), "fonts/a.woff2", "wOF2....");
    put(d.path(), "img/b.png", png_bytes(20));
    auto b = load_bundle(d.path());
    ASSERT_NE(b.find("fonts/a.woff2"), nullptr);
    EXPECT_EQ(b.find("fonts/a.woff2")->cls, AssetClass::font);
    ASSERT_NE(b.find("img/b.png"), nullptr);
    EXPECT_FALSE(b.find("img/b.png")->external);
}

TEST(BundleLoad, Errors)
{
    TempDir empty;
    EXPECT_THROW(load_bundle(empty.path()), BundleError);

    TempDir two;
    put(two.path(), "a.html", "");
    put(two.path(), "b.html", "");
    EXPECT_THROW(load_bundle(two.path()), BundleError);
    LoadOptions opt;
    opt.entry_name = "b.html";
    EXPECT_EQ(load_bundle(two.path(), opt).entry, "b.html");
}

TEST(BundleLoad, UnreadableFileFailsWholeLoad)
{
    if (geteuid() == 0) {
        GTEST_SKIP() << "permission bits are not enforced for root";
    }
    TempDir d;
    put(d.path(), "index.html", "<link rel=stylesheet href=a.css>");
    put(d.path(), "a.css", "x");
    fs::permissions(d.path() / "a.css", fs::perms::none);
    EXPECT_THROW(load_bundle(d.path()), IoError);
}

TEST(BundleWeight, SumsClasses)
{
    TempDir d;
    put(d.path(), "index.html", std::string("<link rel=stylesheet href=a.css><img src=b.jpg>").append(1024 - 47, ' '));
    put(d.path(), "a.css", std::string(2048, ' '));
    std::string jpg("\xFF\xD8\xFF", 3);
    jpg.resize(700 * 1024, 'j');
    put(d.path(), "b.jpg", jpg);
    auto b = load_bundle(d.path());
    auto w = bundle_weight(b, 12);
    EXPECT_EQ(w.total_bytes, 703u * 1024);
    EXPECT_EQ(w.class_bytes(AssetClass::html), 1024u);
    EXPECT_EQ(w.class_bytes(AssetClass::css), 2048u);
    EXPECT_EQ(w.class_bytes(AssetClass::image), 700u * 1024);
    EXPECT_EQ(w.dom_ops, 12u);
    EXPECT_EQ(w.code_bytes(), 3u * 1024);
}

TEST(BundleWeight, EntryOnly)
{
    SiteBundle b;
    b.entry = "index.html";
    b.assets.push_back({"index.html", AssetClass::html, "index.html", 5, "<p>x", false});
    auto w = bundle_weight(b, 0);
    EXPECT_EQ(w.total_bytes, 5u);
    EXPECT_EQ(w.per_class_bytes.size(), 1u);
}

TEST(BundleWeight, InvariantUnderReordering)
{
    std::mt19937 rng(3);
    for (int i = 0; i < 100; ++i) {
        SiteBundle b;
        b.entry = "e";
        for (int k = 0; k < 8; ++k) {
            Asset a;
            a.id = "a" + std::to_string(k);
            a.cls = static_cast<AssetClass>(rng() % 7);
            a.bytes = rng() % 100000;
            a.external = true;
            b.assets.push_back(a);
        }
        auto w1 = bundle_weight(b, 3);
        std::shuffle(b.assets.begin(), b.assets.end(), rng);
        auto w2 = bundle_weight(b, 3);
        EXPECT_EQ(w1.total_bytes, w2.total_bytes);
        EXPECT_EQ(w1.per_class_bytes, w2.per_class_bytes);
        std::uint64_t sum = 0;
        for (auto& [c, v] : w1.per_class_bytes) {
            sum += v;
        }
        EXPECT_EQ(sum, w1.total_bytes);
    }
}

TEST(BundleEligibility, Thresholds)
{
    WeightReport w;
    w.total_bytes = 700 * 1024;
    w.dom_ops = 12;
    EXPECT_TRUE(is_benchmark_eligible(w));
    w.dom_ops = 9;
    EXPECT_FALSE(is_benchmark_eligible(w));
    w.total_bytes = 600 * 1024;
    w.dom_ops = 10;
    EXPECT_FALSE(is_benchmark_eligible(w));
    w.total_bytes += 1;
    EXPECT_TRUE(is_benchmark_eligible(w));
}

TEST(BundleEligibility, Monotone)
{
    std::mt19937 rng(11);
    for (int i = 0; i < 2000; ++i) {
        WeightReport w;
        w.total_bytes = rng() % (1200 * 1024);
        w.dom_ops = rng() % 30;
        WeightReport more = w;
        more.total_bytes += rng() % 100000;
        more.dom_ops += rng() % 5;
        if (is_benchmark_eligible(w)) {
            EXPECT_TRUE(is_benchmark_eligible(more));
        }
    }
}

TEST(BundleWrite, RoundtripTrivialAndFixture)
{
    TempDir src;
    put(src.path(), "index.html",
        "<link rel=stylesheet href=css/a.css><img src=img/p.png><script src=https://cdn/x.js></script>");
    put(src.path(), "css/a.css", ".x{background:url(../img/q.png)}");
    put(src.path(), "img/p.png", png_bytes(100));
    put(src.path(), "img/q.png", png_bytes(50));
    put(src.path(), std::string(sidecar_manifest_name), "{\"https://cdn/x.js\": 900}");
    auto b = load_bundle(src.path());
    TempDir out;
    write_bundle(b, out.path() / "site");
    auto c = load_bundle(out.path() / "site");
    EXPECT_TRUE(structurally_equal(b, c));
    for (const auto& a : b.assets) {
        EXPECT_EQ(sha256_hex(a.payload), sha256_hex(c.find(a.id)->payload));
    }
    // overwriting an existing directory replaces it completely
    write_bundle(b, out.path() / "site");
    EXPECT_TRUE(structurally_equal(b, load_bundle(out.path() / "site")));
}

TEST(BundleWrite, ReadOnlyTargetFails)
{
    if (geteuid() == 0) {
        GTEST_SKIP() << "permission bits are not enforced for root";
    }
    TempDir d;
    put(d.path(), "index.html", "<p>x</p>");
    auto b = load_bundle(d.path());
    TempDir ro;
    fs::permissions(ro.path(), fs::perms::owner_read | fs::perms::owner_exec);
    EXPECT_THROW(write_bundle(b, ro.path() / "out"), IoError);
    fs::permissions(ro.path(), fs::perms::owner_all);
}

TEST(BundleWrite, UnwritableTargetFailsEvenAsRoot)
{
    TempDir d;
    put(d.path(), "index.html", "<p>x</p>");
    auto b = load_bundle(d.path());
    // a regular file where a parent directory is required
    put(d.path(), "blocker", "x");
    EXPECT_THROW(write_bundle(b, d.path() / "blocker" / "out"), IoError);
}

TEST(BundleWrite, FailedWriteLeavesExistingOutputUntouched)
{
    TempDir d;
    put(d.path(), "index.html", "<p>x</p>");
    auto b = load_bundle(d.path());
    TempDir out;
    write_bundle(b, out.path() / "site");
    SiteBundle bad = b;
    Asset a;
    a.id = "index.html/child"; // cannot be created: index.html is a file in staging
    a.cls = AssetClass::css;
    a.url = a.id;
    a.payload = "x";
    a.bytes = 1;
    bad.assets.push_back(a);
    EXPECT_THROW(write_bundle(bad, out.path() / "site"), IoError);
    EXPECT_TRUE(structurally_equal(b, load_bundle(out.path() / "site")));
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(out.path())) {
        ++entries;
    }
    EXPECT_EQ(entries, 1u);
}

TEST(BundleResolve, Paths)
{
    EXPECT_EQ(resolve_reference("index.html", "a.css").id, "a.css");
    EXPECT_TRUE(resolve_reference("index.html", "a.css").local);
    EXPECT_EQ(resolve_reference("css/a.css", "../img/x.png?v=2#f").id, "img/x.png");
    EXPECT_EQ(resolve_reference("css/a.css", "/img/x.png").id, "img/x.png");
    EXPECT_EQ(resolve_reference("index.html", "./a%20b.css").id, "a b.css");
    EXPECT_FALSE(resolve_reference("index.html", "//cdn/x.js").local);
    EXPECT_FALSE(resolve_reference("index.html", "HTTPS://cdn/x.js").local);
    EXPECT_FALSE(resolve_reference("index.html", "../outside.css").local);
    EXPECT_TRUE(resolve_reference("index.html", "data:image/png;base64,xx").id.empty());
    EXPECT_TRUE(resolve_reference("index.html", "#top").id.empty());
}

TEST(BundleResolve, RelativeReferenceInverts)
{
    const char* pairs[][2] = {{"index.html", "img/a.png"}, {"css/a.css", "img/b.png"}, {"css/a.css", "css/c.css"},
                              {"a/b/c.css", "a/d.png"},    {"a/b/c.css", "x.png"}};
    for (auto& p : pairs) {
        std::string rel = relative_reference(p[0], p[1]);
        EXPECT_EQ(resolve_reference(p[0], rel).id, p[1]) << rel;
    }
}

TEST(BundleClassify, ExtensionThenSniffing)
{
    EXPECT_EQ(classify_asset("a.css", "<svg>"), AssetClass::css);
    EXPECT_EQ(classify_asset("blob", "<!DOCTYPE html><p>"), AssetClass::html);
    EXPECT_EQ(classify_asset("blob", "  <svg xmlns='x'/>"), AssetClass::svg);
    EXPECT_EQ(classify_asset("blob", "<?xml version='1.0'?><svg/>"), AssetClass::svg);
    EXPECT_EQ(classify_asset("blob", std::string("\xFF\xD8\xFF\xE0", 4)), AssetClass::image);
    EXPECT_EQ(classify_asset("blob", "wOF2xxxx"), AssetClass::font);
    EXPECT_EQ(classify_asset("blob", "plain"), AssetClass::other);
    EXPECT_EQ(classify_asset("x.js?v=1", ""), AssetClass::script);
}

TEST(BundleRelink, DropsUnreachableAndAddsNewTargets)
{
    TempDir d;
    put(d.path(), "index.html", "<img src=a.png>");
    put(d.path(), "a.png", png_bytes(10));
    auto b = load_bundle(d.path());
    b.entry_asset().payload = "<img src=a.avif>";
    b.entry_asset().bytes = b.entry_asset().payload.size();
    relink(b);
    EXPECT_EQ(b.find("a.png"), nullptr);
    ASSERT_NE(b.find("a.avif"), nullptr);
    EXPECT_TRUE(b.find("a.avif")->external);
    EXPECT_NO_THROW(b.validate());
}

TEST(BundleFromFiles, MatchesDirectoryLoadOnFixtures)
{
    namespace fs = std::filesystem;
    const fs::path root = WATTLESS_FIXTURE_DIR;
    std::size_t checked = 0;
    for (const auto& d : fs::directory_iterator(root)) {
        std::map<std::string, std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(d.path())) {
            if (e.is_regular_file()) {
                files[fs::relative(e.path(), d.path()).generic_string()] = read_file(e.path());
            }
        }
        auto disk = load_bundle(d.path());
        auto mem = bundle_from_files(files);
        EXPECT_TRUE(structurally_equal(disk, mem)) << d.path();
        ++checked;
    }
    EXPECT_GE(checked, 12u);
}

TEST(BundleFromFiles, EntryRulesAndExternalSizes)
{
    EXPECT_THROW(bundle_from_files({}), BundleError);
    EXPECT_THROW(bundle_from_files({{"a.html", "x"}, {"b.html", "y"}}), BundleError);
    EXPECT_THROW(bundle_from_files({{"sub/a.html", "x"}}), BundleError);
    auto b = bundle_from_files({{"index.html", "<img src=big.png>"}}, {}, {{"big.png", 4096}});
    const Asset* img = b.find("big.png");
    ASSERT_NE(img, nullptr);
    EXPECT_TRUE(img->external);
    EXPECT_EQ(img->bytes, 4096u);
    auto chosen = bundle_from_files({{"a.html", "x"}, {"b.html", "y"}}, LoadOptions{"b.html"});
    EXPECT_EQ(chosen.entry, "b.html");
}
