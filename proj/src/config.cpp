#include "exbound/config.hpp"

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

namespace exbound {

namespace {

// ---------------------------------------------------------------------
// Raw tree: sections hold ordered key/value entries and subsections, each
// remembering its source line so schema errors can point at the input.
// ---------------------------------------------------------------------

struct Section;

struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
};

struct Child {
    std::unique_ptr<Section> section;
    int line = 0;
    mutable bool used = false;
};

struct Section {
    std::map<std::string, Entry> entries;
    std::map<std::string, Child> children;
};

[[noreturn]] void fail(const std::string& name, int line,
                       const std::string& what) {
    throw ConfigError(name + ":" + std::to_string(line) + ": " + what);
}

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '.' || c == '-' || c == '+';
}

// Tokenizer over one line: identifiers/numbers, '=', '{', '}'.  '#' starts
// a comment running to the end of the line.
struct Token {
    enum class Kind { Word, Equals, Open, Close } kind;
    std::string text;
};

std::vector<Token> lex_line(const std::string& name, int line_no,
                            const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == '#') break;
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '=') {
            out.push_back({Token::Kind::Equals, "="});
            ++i;
            continue;
        }
        if (c == '{') {
            out.push_back({Token::Kind::Open, "{"});
            ++i;
            continue;
        }
        if (c == '}') {
            out.push_back({Token::Kind::Close, "}"});
            ++i;
            continue;
        }
        if (ident_char(c)) {
            std::size_t j = i;
            while (j < line.size() && ident_char(line[j])) ++j;
            out.push_back({Token::Kind::Word, line.substr(i, j - i)});
            i = j;
            continue;
        }
        fail(name, line_no,
             std::string("unexpected character '") + c + "' in input");
    }
    return out;
}

Section parse_tree(const std::string& text, const std::string& name) {
    Section root;
    std::vector<Section*> stack{&root};
    std::vector<std::string> path;  // open section names, for messages

    auto section_label = [&]() {
        if (path.empty()) return std::string("the top level");
        std::string s = "section '";
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i) s += '.';
            s += path[i];
        }
        return s + "'";
    };

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::vector<Token> toks = lex_line(name, line_no, line);
        std::size_t i = 0;
        while (i < toks.size()) {
            const Token& t = toks[i];
            if (t.kind == Token::Kind::Close) {
                if (stack.size() == 1) {
                    fail(name, line_no, "unmatched '}'");
                }
                stack.pop_back();
                path.pop_back();
                ++i;
                continue;
            }
            if (t.kind != Token::Kind::Word) {
                fail(name, line_no,
                     "expected a key or section name, got '" + t.text + "'");
            }
            if (i + 1 >= toks.size()) {
                fail(name, line_no,
                     "dangling name '" + t.text + "' (expected '=' or '{')");
            }
            const Token& next = toks[i + 1];
            if (next.kind == Token::Kind::Open) {
                Section* cur = stack.back();
                auto [it, fresh] = cur->children.try_emplace(t.text);
                if (!fresh) {
                    fail(name, line_no,
                         "duplicate section '" + t.text + "' in " +
                             section_label() + " (first opened at line " +
                             std::to_string(it->second.line) + ")");
                }
                it->second.section = std::make_unique<Section>();
                it->second.line = line_no;
                stack.push_back(it->second.section.get());
                path.push_back(t.text);
                i += 2;
                continue;
            }
            if (next.kind != Token::Kind::Equals) {
                fail(name, line_no,
                     "expected '=' or '{' after '" + t.text + "'");
            }
            // Value: consume words until the next key (word followed by
            // '=' or '{'), a brace, or the end of the line.  This lets a
            // list value `spots = 60 80 100` share a line with nothing
            // else while still allowing `a = 1  b = 2` one-liners.
            std::size_t j = i + 2;
            std::string value;
            while (j < toks.size() && toks[j].kind == Token::Kind::Word) {
                const bool starts_pair =
                    j + 1 < toks.size() &&
                    (toks[j + 1].kind == Token::Kind::Equals ||
                     toks[j + 1].kind == Token::Kind::Open);
                if (starts_pair) break;
                if (!value.empty()) value += ' ';
                value += toks[j].text;
                ++j;
            }
            if (value.empty()) {
                fail(name, line_no, "missing value after '" + t.text + " ='");
            }
            Section* cur = stack.back();
            auto [it, fresh] = cur->entries.try_emplace(t.text);
            if (!fresh) {
                fail(name, line_no,
                     "duplicate key '" + t.text + "' in " + section_label() +
                         " (first set at line " +
                         std::to_string(it->second.line) + ")");
            }
            it->second.value = value;
            it->second.line = line_no;
            i = j;
        }
    }
    if (stack.size() != 1) {
        fail(name, line_no,
             "unterminated section '" + path.back() + "' at end of input");
    }
    return root;
}

// ---------------------------------------------------------------------
// Typed view: extraction helpers that mark entries as consumed, so that
// everything left over afterwards is reported as an unknown key.
// ---------------------------------------------------------------------

class View {
  public:
    View(const Section* sec, std::string path, const std::string* name)
        : sec_(sec), path_(std::move(path)), name_(name) {}

    bool present() const { return sec_ != nullptr; }

    bool has(const std::string& key) const {
        return sec_ && sec_->entries.count(key) > 0;
    }

    std::string require_string(const std::string& key) const {
        const Entry* e = find(key);
        if (!e) {
            throw ConfigError(*name_ + ": missing required key '" + key +
                              "' in " + label());
        }
        return e->value;
    }

    std::string get_string(const std::string& key,
                           const std::string& fallback) const {
        const Entry* e = find(key);
        return e ? e->value : fallback;
    }

    double require_double(const std::string& key) const {
        const Entry* e = find(key);
        if (!e) {
            throw ConfigError(*name_ + ": missing required key '" + key +
                              "' in " + label());
        }
        return to_double(key, *e, e->value);
    }

    double get_double(const std::string& key, double fallback) const {
        const Entry* e = find(key);
        return e ? to_double(key, *e, e->value) : fallback;
    }

    int get_int(const std::string& key, int fallback) const {
        const Entry* e = find(key);
        if (!e) return fallback;
        const double v = to_double(key, *e, e->value);
        const int n = static_cast<int>(v);
        if (static_cast<double>(n) != v) {
            fail(*name_, e->line,
                 "key '" + key + "' expects an integer, got '" + e->value +
                     "'");
        }
        return n;
    }

    std::vector<double> get_list(const std::string& key) const {
        const Entry* e = find(key);
        std::vector<double> out;
        if (!e) return out;
        std::istringstream in(e->value);
        std::string item;
        while (in >> item) out.push_back(to_double(key, *e, item));
        return out;
    }

    View section(const std::string& key) const {
        if (sec_) {
            auto it = sec_->children.find(key);
            if (it != sec_->children.end()) {
                it->second.used = true;
                return View(it->second.section.get(), join(key), name_);
            }
        }
        return View(nullptr, join(key), name_);
    }

    View require_section(const std::string& key) const {
        View v = section(key);
        if (!v.present()) {
            throw ConfigError(*name_ + ": missing required section '" + key +
                              "' in " + label());
        }
        return v;
    }

    // Report the first (lowest-line) unconsumed entry or section.
    void reject_unknown() const {
        if (!sec_) return;
        const std::string* first_key = nullptr;
        int first_line = 0;
        bool first_is_section = false;
        auto consider = [&](const std::string& key, int line, bool is_sec) {
            if (!first_key || line < first_line) {
                first_key = &key;
                first_line = line;
                first_is_section = is_sec;
            }
        };
        for (const auto& [key, e] : sec_->entries) {
            if (!e.used) consider(key, e.line, false);
        }
        for (const auto& [key, c] : sec_->children) {
            if (!c.used) consider(key, c.line, true);
        }
        if (first_key) {
            fail(*name_, first_line,
                 std::string("unknown ") +
                     (first_is_section ? "section '" : "key '") + *first_key +
                     "' in " + label());
        }
    }

    std::string label() const {
        return path_.empty() ? "the top level" : "section '" + path_ + "'";
    }

  private:
    const Entry* find(const std::string& key) const {
        if (!sec_) return nullptr;
        auto it = sec_->entries.find(key);
        if (it == sec_->entries.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    double to_double(const std::string& key, const Entry& e,
                     const std::string& text) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument(text);
            return v;
        } catch (const std::exception&) {
            fail(*name_, e.line,
                 "key '" + key + "' expects a number, got '" + text + "'");
        }
    }

    std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const Section* sec_;
    std::string path_;
    const std::string* name_;
};

ParamCurve parse_curve(const View& v, bool required_for_model,
                       const std::string& name) {
    if (!v.present()) {
        if (required_for_model) {
            throw ConfigError(name + ": missing required " + v.label());
        }
        return ParamCurve::constant(0.0);
    }
    const std::string kind = v.require_string("kind");
    ParamCurve out;
    if (kind == "constant") {
        out = ParamCurve::constant(v.require_double("value"));
    } else if (kind == "exp_affine") {
        out = ParamCurve::exp_affine(v.require_double("a"),
                                     v.require_double("b"),
                                     v.get_double("c", 0.0));
    } else {
        throw ConfigError(name + ": " + v.label() +
                          ": kind must be 'constant' or 'exp_affine', got '" +
                          kind + "'");
    }
    v.reject_unknown();
    return out;
}

ModelSpec parse_model(const View& top, const std::string& name) {
    const View m = top.require_section("model");
    ModelSpec spec;
    const std::string kind = m.require_string("kind");
    if (kind == "gbm") {
        spec.kind = ModelKind::Gbm;
    } else if (kind == "ou") {
        spec.kind = ModelKind::Ou;
    } else {
        throw ConfigError(name + ": model.kind must be 'gbm' or 'ou', got '" +
                          kind + "'");
    }
    spec.strike = m.require_double("strike");
    spec.maturity = m.require_double("maturity");
    spec.valuation_time = m.get_double("valuation_time", 0.0);
    spec.r = parse_curve(m.section("r"), true, name);
    spec.q = parse_curve(m.section("q"), spec.kind == ModelKind::Gbm, name);
    spec.sigma = parse_curve(m.section("sigma"), true, name);
    if (spec.kind == ModelKind::Ou) {
        spec.kappa = parse_curve(m.section("kappa"), true, name);
        spec.theta = parse_curve(m.section("theta"), true, name);
        if (m.has("q") || m.section("q").present()) {
            throw ConfigError(
                name +
                ": model.q is not accepted for kind = ou (the exercise-gain "
                "rates derive from r, kappa and theta)");
        }
    } else {
        for (const char* extra : {"kappa", "theta"}) {
            if (m.section(extra).present()) {
                throw ConfigError(name + ": model." + extra +
                                  " is only accepted for kind = ou");
            }
        }
    }
    m.reject_unknown();
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(name + ": " + e.what());
    }
    return spec;
}

SolverOptions parse_solver(const View& top) {
    SolverOptions opt;
    const View s = top.section("solver");
    if (!s.present()) return opt;
    opt.n_nodes = s.get_int("n_nodes", opt.n_nodes);
    opt.root_ftol_rel = s.get_double("root_ftol_rel", opt.root_ftol_rel);
    opt.converge_tol_rel =
        s.get_double("converge_tol_rel", opt.converge_tol_rel);
    opt.small_eps_rel = s.get_double("small_eps_rel", opt.small_eps_rel);
    opt.gap_eps_rel = s.get_double("gap_eps_rel", opt.gap_eps_rel);
    opt.max_iter = s.get_int("max_iter", opt.max_iter);
    opt.endpoint_guard = s.get_double("endpoint_guard", opt.endpoint_guard);
    s.reject_unknown();
    if (opt.n_nodes < 8) {
        throw ConfigError("solver.n_nodes must be at least 8");
    }
    if (opt.max_iter < 1) {
        throw ConfigError("solver.max_iter must be at least 1");
    }
    return opt;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& name) {
    RunConfig cfg;
    cfg.source_name = name;
    cfg.raw_text = text;

    const Section root = parse_tree(text, name);
    const View top(&root, "", &cfg.source_name);

    cfg.model = parse_model(top, name);
    cfg.solver = parse_solver(top);

    const double K = cfg.model.strike;
    const double t0 = cfg.model.valuation_time;

    {
        const View p = top.section("price");
        cfg.price.spots = {0.6 * K, 0.8 * K, 1.0 * K, 1.2 * K, 1.4 * K};
        cfg.price.times = {t0};
        if (p.present()) {
            if (p.has("spots")) cfg.price.spots = p.get_list("spots");
            if (p.has("times")) cfg.price.times = p.get_list("times");
            p.reject_unknown();
        }
        for (double x : cfg.price.spots) {
            if (!(x >= 0.0)) {
                throw ConfigError(name + ": price.spots must be >= 0");
            }
        }
        for (double t : cfg.price.times) {
            if (t < t0 || t > cfg.model.maturity) {
                throw ConfigError(
                    name +
                    ": price.times must lie in [valuation_time, maturity]");
            }
        }
        if (cfg.price.spots.empty() || cfg.price.times.empty()) {
            throw ConfigError(name + ": price.spots/times must be non-empty");
        }
    }

    {
        const View h = top.section("hedge");
        cfg.hedge.spot = K;
        cfg.hedge.time = t0;
        if (h.present()) {
            cfg.hedge.spot = h.get_double("spot", cfg.hedge.spot);
            cfg.hedge.time = h.get_double("time", cfg.hedge.time);
            cfg.hedge.n_slices = h.get_int("n_slices", cfg.hedge.n_slices);
            h.reject_unknown();
        }
        if (cfg.hedge.n_slices < 1) {
            throw ConfigError(name + ": hedge.n_slices must be positive");
        }
        if (!(cfg.hedge.spot >= 0.0)) {
            throw ConfigError(name + ": hedge.spot must be >= 0");
        }
        if (cfg.hedge.time < t0 || cfg.hedge.time >= cfg.model.maturity) {
            throw ConfigError(
                name + ": hedge.time must lie in [valuation_time, maturity)");
        }
    }

    {
        const View s = top.section("sweep");
        if (s.present()) {
            cfg.sweep.sigmas = s.get_list("sigmas");
            s.reject_unknown();
            for (double v : cfg.sweep.sigmas) {
                if (!(v > 0.0)) {
                    throw ConfigError(name + ": sweep.sigmas must be > 0");
                }
            }
        }
    }

    {
        const View v = top.section("verify");
        cfg.verify.spots = cfg.price.spots;
        if (v.present()) {
            if (v.has("spots")) cfg.verify.spots = v.get_list("spots");
            cfg.verify.rel_tol = v.get_double("rel_tol", cfg.verify.rel_tol);
            cfg.verify.abs_tol_rel =
                v.get_double("abs_tol_rel", cfg.verify.abs_tol_rel);
            cfg.verify.boundary_cells =
                v.get_int("boundary_cells", cfg.verify.boundary_cells);
            cfg.verify.boundary_skirt =
                v.get_double("boundary_skirt", cfg.verify.boundary_skirt);
            cfg.verify.fd.n_space =
                v.get_int("fd_n_space", cfg.verify.fd.n_space);
            cfg.verify.fd.n_time = v.get_int("fd_n_time", cfg.verify.fd.n_time);
            v.reject_unknown();
        }
        if (cfg.verify.fd.n_space < 16 || cfg.verify.fd.n_time < 16) {
            throw ConfigError(name +
                              ": verify.fd_n_space/fd_n_time must be >= 16");
        }
    }

    {
        const View o = top.section("output");
        if (o.present()) {
            cfg.out_dir = o.get_string("directory", cfg.out_dir);
            o.reject_unknown();
        }
    }

    top.reject_unknown();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path);
}

std::string config_hash(const std::string& raw_text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : raw_text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace exbound
