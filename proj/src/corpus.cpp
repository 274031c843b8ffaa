#include "wattless/corpus.hpp"

#include "wattless/util.hpp"

#include <cstdio>
#include <map>
#include <random>

namespace wattless {

namespace fs = std::filesystem;

namespace {

/// Engine output is fixed by the standard; distributions are not, so sampling is done here.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    int range(IntRange r) { return r.lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(r.hi - r.lo + 1)); }
    double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double range(RealRange r) { return r.lo + (r.hi - r.lo) * unit(); }
    bool chance(double p) { return unit() < p; }
    std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
    std::uint64_t next() { return rng_(); }

private:
    std::mt19937_64 rng_;
};

const char* const words[] = {"energy", "page", "light", "green", "code", "browser", "network", "device",
                             "render", "style", "script", "image", "reader", "budget", "carbon", "layout",
                             "frame", "signal", "cache", "motion", "quiet", "simple", "steady", "open"};

std::string sentence(Sampler& s, int n)
{
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) {
            out += ' ';
        }
        out += words[s.pick(std::size(words))];
    }
    out[0] = static_cast<char>(out[0] - 'a' + 'A');
    return out + ".";
}

std::string hex_color(Sampler& s)
{
    static const char digits[] = "0123456789abcdef";
    // doubled nibbles leave room for colour shortening
    std::string c = "#";
    for (int i = 0; i < 3; ++i) {
        char d = digits[s.pick(16)];
        c += d;
        c += s.chance(0.5) ? d : digits[s.pick(16)];
    }
    return c;
}

std::string binary(std::string magic, std::size_t size, Sampler& s)
{
    std::string out = std::move(magic);
    out.reserve(size);
    while (out.size() < size) {
        std::uint64_t v = s.next();
        for (int i = 0; i < 8 && out.size() < size; ++i) {
            out.push_back(static_cast<char>(v >> (8 * i)));
        }
    }
    out.resize(size);
    return out;
}

struct Image {
    std::string name;
    std::string magic;
    std::size_t bytes;
};

Image make_image(const std::string& stem, bool legacy, std::size_t bytes, Sampler& s)
{
    if (legacy) {
        switch (s.pick(3)) {
        case 0: return {stem + ".png", std::string("\x89PNG\r\n\x1a\n", 8), bytes};
        case 1: return {stem + ".gif", "GIF89a", bytes};
        default: return {stem + ".jpg", std::string("\xFF\xD8\xFF\xE0", 4), bytes};
        }
    }
    if (s.chance(0.5)) {
        return {stem + ".webp", std::string("RIFF\0\0\0\0WEBPVP8 ", 16), bytes};
    }
    return {stem + ".avif", std::string("\0\0\0\x1c" "ftypavif", 12), bytes};
}

struct Page {
    std::map<std::string, std::string> files;

    std::uint64_t bytes() const
    {
        std::uint64_t n = 0;
        for (const auto& [k, v] : files) {
            n += v.size();
        }
        return n;
    }
};

/// Whitespace-heavy source, or its compact form for optimized pages.
class Writer {
public:
    explicit Writer(bool compact) : compact_(compact) {}

    void line(int depth, const std::string& text)
    {
        if (compact_) {
            out_ += text;
        } else {
            out_ += std::string(static_cast<std::size_t>(depth) * 2, ' ') + text + "\n";
        }
    }
    void comment(int depth, const std::string& open, const std::string& text, const std::string& close)
    {
        if (!compact_) {
            line(depth, open + " " + text + " " + close);
        }
    }
    std::string str() const { return out_; }

private:
    bool compact_;
    std::string out_;
};

Page make_page(std::size_t index, const CorpusSpec& spec, Sampler& s)
{
    const bool optimized = spec.optimized_every != 0 && index % spec.optimized_every == 0;
    const double legacy = optimized ? 0.0 : s.range(spec.legacy_image_share);
    const double density = s.range(spec.comment_density);
    const int used_rules = s.range(spec.used_rules);
    const int unused_rules = optimized ? 0 : s.range(spec.unused_rules);
    const int image_count = s.range(spec.images);
    const int blocking = optimized ? 0 : s.range(spec.blocking_scripts);
    const int dom_ops = s.range(spec.dom_ops);
    const int consoles = optimized ? 0 : s.range(spec.console_statements);
    const bool font = s.chance(spec.font_probability);
    const bool unused_font = !optimized && s.chance(spec.unused_font_probability);

    Page page;
    std::vector<std::string> classes;
    for (int i = 0; i < used_rules; ++i) {
        classes.push_back("c" + std::to_string(i));
    }

    Writer css(optimized);
    css.comment(0, "/*", "site styles, page " + std::to_string(index), "*/");
    if (font) {
        css.line(0, "@font-face {");
        css.line(1, "font-family: \"Brand Sans\";");
        css.line(1, "src: url(\"../fonts/brand.woff2\") format(\"woff2\");");
        css.line(0, "}");
        page.files["fonts/brand.woff2"] = binary("wOF2", 30000 + s.pick(60000), s);
    }
    if (unused_font) {
        css.line(0, "@font-face {");
        css.line(1, "font-family: \"Archive Serif\";");
        css.line(1, "src: url(\"../fonts/archive.woff2\") format(\"woff2\");");
        css.line(0, "}");
        page.files["fonts/archive.woff2"] = binary("wOF2", 30000 + s.pick(50000), s);
    }
    css.line(0, std::string("body {") + (optimized ? "" : " margin: 0 ;") + " font-family: " + (font ? "\"Brand Sans\", " : "")
                    + "sans-serif; color: " + hex_color(s) + "; }");
    // used and unused rules interleave the way stylesheets accrete
    std::vector<int> order;
    for (int i = 0; i < used_rules + unused_rules; ++i) {
        order.push_back(i);
    }
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[s.pick(i)]);
    }
    for (int r : order) {
        if (s.chance(density)) {
            css.comment(0, "/*", sentence(s, 6), "*/");
        }
        std::string sel = r < used_rules ? "." + classes[static_cast<std::size_t>(r)]
                                         : ".legacy-" + std::to_string(r - used_rules);
        if (s.chance(0.3)) {
            sel += " p";
        }
        css.line(0, sel + " {");
        css.line(1, "color: " + hex_color(s) + ";");
        css.line(1, "padding: " + std::to_string(s.pick(24)) + "px " + std::to_string(s.pick(24)) + "px;");
        if (s.chance(0.5)) {
            css.line(1, "border-bottom: 1px solid " + hex_color(s) + ";");
        }
        css.line(0, "}");
    }
    page.files["css/site.css"] = css.str();

    Writer js(optimized);
    js.comment(0, "//", "interactive widgets", "");
    js.line(0, "(function () {");
    js.line(1, "var list = document.getElementById('feed');");
    for (int i = 1; i < dom_ops; i += 2) {
        if (s.chance(density)) {
            js.comment(1, "//", sentence(s, 5), "");
        }
        js.line(1, "var n" + std::to_string(i) + " = document.createElement('li');");
        js.line(1, "list.appendChild(n" + std::to_string(i) + ");");
    }
    for (int i = 0; i < consoles; ++i) {
        js.line(1, "console.log('widget " + std::to_string(i) + " ready');");
    }
    js.line(0, "})();");
    page.files["js/app.js"] = js.str();
    for (int i = 0; i < blocking; ++i) {
        Writer lib(false);
        lib.comment(0, "/*", "vendor helper " + std::to_string(i), "*/");
        lib.line(0, "var helper" + std::to_string(i) + " = {");
        lib.line(1, "version: '" + std::to_string(i) + ".0',");
        lib.line(1, "ready: function () { return true; }");
        lib.line(0, "};");
        page.files["js/lib" + std::to_string(i) + ".js"] = lib.str();
    }

    std::vector<Image> images;
    for (int i = 0; i < image_count; ++i) {
        std::size_t kib = static_cast<std::size_t>(s.range(spec.image_kib));
        images.push_back(make_image("img/photo-" + std::to_string(i + 1), s.chance(legacy), kib * 1024, s));
    }

    auto build_html = [&](const std::vector<Image>& imgs) {
        Writer h(optimized);
        h.line(0, "<!DOCTYPE html>");
        h.line(0, "<html lang=\"en\">");
        h.line(0, "<head>");
        h.line(1, "<meta charset=\"utf-8\">");
        h.line(1, "<title>Synthetic page " + std::to_string(index) + "</title>");
        h.comment(1, "<!--", "styles", "-->");
        h.line(1, "<link rel=\"stylesheet\" href=\"css/site.css\">");
        for (int i = 0; i < blocking; ++i) {
            h.line(1, "<script src=\"js/lib" + std::to_string(i) + ".js\"></script>");
        }
        h.line(0, "</head>");
        h.line(0, "<body>");
        h.line(1, "<ul id=\"feed\"></ul>");
        std::size_t c = 0;
        for (std::size_t i = 0; i < imgs.size(); ++i) {
            if (s.chance(density)) {
                h.comment(1, "<!--", "section " + std::to_string(i + 1), "-->");
            }
            std::string cls = classes[c++ % classes.size()];
            h.line(1, "<section class=\"" + cls + "\">");
            h.line(2, "<h2 class=\"" + classes[c++ % classes.size()] + "\">" + sentence(s, 3) + "</h2>");
            std::string lazy = optimized && i >= 3 ? " loading=\"lazy\"" : "";
            h.line(2, "<img src=\"" + imgs[i].name + "\" alt=\"" + sentence(s, 2) + "\"" + lazy + ">");
            h.line(2, "<p class=\"" + classes[c++ % classes.size()] + "\">" + sentence(s, 20 + static_cast<int>(s.pick(30))) + "</p>");
            h.line(1, "</section>");
        }
        for (; c < classes.size(); ++c) {
            h.line(1, "<div class=\"" + classes[c] + "\"><p>" + sentence(s, 4) + "</p></div>");
        }
        h.line(1, std::string("<script src=\"js/app.js\"") + (optimized ? " defer" : "") + "></script>");
        h.line(0, "</body>");
        h.line(0, "</html>");
        return h.str();
    };

    page.files["index.html"] = build_html(images);
    for (const auto& img : images) {
        page.files[img.name] = binary(img.magic, img.bytes, s);
    }
    std::uint64_t total = page.bytes();
    if (total <= spec.min_page_bytes) {
        std::size_t need = spec.min_page_bytes - total + 1 + s.pick(200 * 1024);
        Image hero = make_image("img/hero", s.chance(legacy), need, s);
        images.insert(images.begin(), hero);
        page.files["index.html"] = build_html(images);
        page.files[hero.name] = binary(hero.magic, hero.bytes, s);
        // the rebuilt document changes size; keep the total clear of the threshold
        if (page.bytes() <= spec.min_page_bytes) {
            page.files[hero.name] = binary(hero.magic, hero.bytes + (spec.min_page_bytes - page.bytes()) + 1024, s);
        }
    }
    return page;
}

} // namespace

std::vector<fs::path> generate_corpus(const fs::path& out, const CorpusSpec& spec)
{
    if (spec.pages > 999) {
        throw Error("corpus size is limited to 999 pages");
    }
    std::vector<fs::path> dirs;
    for (std::size_t i = 1; i <= spec.pages; ++i) {
        // one stream per page, so a page does not depend on the preceding ones
        Sampler s(spec.seed * 1000003u + i);
        Page page = make_page(i, spec, s);
        char name[16];
        std::snprintf(name, sizeof name, spec.pages < 100 ? "page-%02zu" : "page-%03zu", i);
        fs::path dir = out / name;
        std::error_code ec;
        fs::remove_all(dir, ec);
        for (const auto& [rel, data] : page.files) {
            fs::create_directories((dir / rel).parent_path());
            write_file(dir / rel, data);
        }
        dirs.push_back(dir);
    }
    return dirs;
}

} // namespace wattless
