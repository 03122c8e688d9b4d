#include "subrie/structure.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "subrie/linalg.hpp"
#include "subrie/parallel.hpp"

namespace subrie {

void SRStructure::validate() const
{
    if (dim <= 0) throw InputError("structure '" + name + "': dimension must be positive");
    if (frame.empty()) throw InputError("structure '" + name + "': empty frame");
    for (const auto& X : frame)
        if (X.dim() != dim) throw InputError("structure '" + name + "': field dimension differs from dim");
    if (domain && domain->dim() != dim) throw InputError("structure '" + name + "': domain dimension differs from dim");
}

Box SRStructure::box_or_default() const { return domain ? *domain : Box::cube(dim, 1.0); }

void SRStructure::require_in_domain(const Eigen::VectorXd& p, const std::string& what) const
{
    if (p.size() != dim) throw InputError(what + ": point has dimension " + std::to_string(p.size()) + ", expected " +
                                          std::to_string(dim));
    if (domain && !domain->contains(p, 1e-12)) throw InputError(what + ": point outside the structure domain");
}

VectorField SRStructure::combination(const std::vector<Rational>& u) const
{
    if (static_cast<int>(u.size()) != rank()) throw InputError("control has wrong length");
    VectorField out(dim);
    for (int i = 0; i < rank(); ++i)
        if (u[static_cast<std::size_t>(i)] != 0) out += u[static_cast<std::size_t>(i)] * frame[static_cast<std::size_t>(i)];
    return out;
}

VectorField lie_bracket(const VectorField& X, const VectorField& Y)
{
    if (X.dim() != Y.dim()) throw InputError("lie_bracket: dimension mismatch");
    VectorField out(X.dim());
    for (int i = 0; i < X.dim(); ++i) out[i] = apply(X, Y[i]) - apply(Y, X[i]);
    return out;
}

namespace {

bool equal_up_to_sign(const VectorField& a, const VectorField& b) { return a == b || a == -b; }

void push_unique(std::vector<BracketWord>& level, const std::vector<std::vector<BracketWord>>& previous, BracketWord bw)
{
    if (bw.field.is_zero()) return;
    for (const auto& lvl : previous)
        for (const auto& w : lvl)
            if (equal_up_to_sign(w.field, bw.field)) return;
    for (const auto& w : level)
        if (equal_up_to_sign(w.field, bw.field)) return;
    level.push_back(std::move(bw));
}

void extend_levels(const Frame& frame, std::vector<std::vector<BracketWord>>& levels)
{
    std::vector<BracketWord> next;
    if (levels.empty()) {
        for (int i = 0; i < static_cast<int>(frame.size()); ++i)
            push_unique(next, levels, {{i}, frame[static_cast<std::size_t>(i)]});
    } else {
        for (int i = 0; i < static_cast<int>(frame.size()); ++i)
            for (const auto& w : levels.back()) {
                std::vector<int> word{i};
                word.insert(word.end(), w.word.begin(), w.word.end());
                push_unique(next, levels, {word, lie_bracket(frame[static_cast<std::size_t>(i)], w.field)});
            }
    }
    levels.push_back(std::move(next));
}

// Growth vector at p, extending `levels` up to max_depth as needed.
std::vector<int> growth_extending(const Frame& frame, std::vector<std::vector<BracketWord>>& levels, int dim,
                                  const Eigen::VectorXd& p, double rank_tol, int max_depth)
{
    std::vector<int> growth;
    std::vector<Eigen::VectorXd> cols;
    for (int k = 0; k < max_depth; ++k) {
        if (static_cast<int>(levels.size()) <= k) extend_levels(frame, levels);
        for (const auto& w : levels[static_cast<std::size_t>(k)]) cols.push_back(w.field.evaluate(p));
        Eigen::MatrixXd M(dim, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) M.col(static_cast<Eigen::Index>(c)) = cols[c];
        growth.push_back(cols.empty() ? 0 : numeric_rank(M, rank_tol));
        if (growth.back() == dim) return growth;
    }
    std::ostringstream os;
    os << "frame is not bracket-generating within depth " << max_depth << "; achieved growth (";
    for (std::size_t i = 0; i < growth.size(); ++i) os << (i ? "," : "") << growth[i];
    os << ")";
    throw NotBracketGeneratingError(os.str(), growth);
}

}  // namespace

std::vector<std::vector<BracketWord>> bracket_levels(const Frame& frame, int max_length)
{
    std::vector<std::vector<BracketWord>> levels;
    for (int k = 0; k < max_length; ++k) extend_levels(frame, levels);
    return levels;
}

std::vector<int> weights_from_growth(const std::vector<int>& growth)
{
    std::vector<int> w;
    int prev = 0;
    for (std::size_t s = 0; s < growth.size(); ++s) {
        for (int j = prev; j < growth[s]; ++j) w.push_back(static_cast<int>(s) + 1);
        prev = std::max(prev, growth[s]);
    }
    return w;
}

std::vector<int> growth_at(const std::vector<std::vector<BracketWord>>& levels, int dim, const Eigen::VectorXd& p,
                           double rank_tol)
{
    auto copy = levels;
    return growth_extending({}, copy, dim, p, rank_tol, static_cast<int>(levels.size()));
}

FlagReport flag_at(const SRStructure& s, const Eigen::VectorXd& p, const FlagOptions& opts)
{
    s.require_in_domain(p, "flag_at");
    std::vector<std::vector<BracketWord>> levels;
    FlagReport rep;
    rep.point = p;
    rep.rank_tol = opts.rank_tol;
    rep.probe_radius = opts.probe_radius;
    rep.growth_vector = growth_extending(s.frame, levels, s.dim, p, opts.rank_tol, opts.max_depth);
    rep.weights = weights_from_growth(rep.growth_vector);
    rep.step = static_cast<int>(rep.growth_vector.size());
    rep.regular = true;
    if (opts.probe) {
        for (int i = 0; i < s.dim && rep.regular; ++i)
            for (double sign : {-1.0, 1.0}) {
                Eigen::VectorXd q = p;
                q[i] += sign * opts.probe_radius;
                std::vector<int> g;
                try {
                    g = growth_extending(s.frame, levels, s.dim, q, opts.rank_tol, opts.max_depth);
                } catch (const NotBracketGeneratingError& e) {
                    g = e.achieved();
                }
                if (g != rep.growth_vector) {
                    rep.regular = false;
                    break;
                }
            }
    }
    return rep;
}

RegularityMap classify_regularity(const SRStructure& s, int per_axis, const std::optional<Box>& box,
                                  const FlagOptions& opts)
{
    Box b = box ? *box : s.box_or_default();
    auto nodes = b.grid(per_axis);
    RegularityMap out;
    out.reports.resize(nodes.size());
    parallel_for(nodes.size(), [&](std::size_t i) { out.reports[i] = flag_at(s, nodes[i], opts); });
    for (const auto& r : out.reports)
        if (!r.regular) {
            out.equiregular = false;
            out.singular_points.push_back(r.point);
        }
    return out;
}

PolyMatrix constant_gauge(int dim, const Eigen::MatrixXd& c)
{
    PolyMatrix out(static_cast<std::size_t>(c.rows()));
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j)
            out[static_cast<std::size_t>(i)].push_back(Multinomial::constant(dim, to_rational(c(i, j))));
    return out;
}

SRStructure apply_gauge(const SRStructure& s, const PolyMatrix& c, double tol, const std::optional<Box>& box,
                        int per_axis)
{
    const int m = s.rank();
    if (static_cast<int>(c.size()) != m) throw InputError("apply_gauge: matrix must be m x m");
    for (const auto& row : c) {
        if (static_cast<int>(row.size()) != m) throw InputError("apply_gauge: matrix must be m x m");
        for (const auto& e : row)
            if (e.dim() != s.dim) throw InputError("apply_gauge: entry dimension mismatch");
    }
    Box b = box ? *box : s.box_or_default();
    for (const auto& q : b.grid(per_axis)) {
        Eigen::MatrixXd cq(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) cq(i, j) = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].evaluate(q);
        double err = (cq * cq.transpose() - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
        if (err > tol) {
            std::ostringstream os;
            os << "apply_gauge: c(q) not orthogonal at q = (" << q.transpose() << "), defect " << err;
            throw InputError(os.str());
        }
    }
    SRStructure out = s;
    out.name = s.name + "-gauged";
    for (int i = 0; i < m; ++i) {
        VectorField Y(s.dim);
        for (int j = 0; j < m; ++j)
            Y += c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * s.frame[static_cast<std::size_t>(j)];
        out.frame[static_cast<std::size_t>(i)] = Y;
    }
    return out;
}

// --- built-ins ------------------------------------------------------------------

namespace {

SRStructure make(const std::string& name, int dim, const std::vector<std::string>& fields)
{
    SRStructure s;
    s.name = name;
    s.dim = dim;
    for (const auto& f : fields) s.frame.push_back(parse_field(f, dim));
    s.validate();
    return s;
}

}  // namespace

SRStructure heisenberg() { return make("heisenberg", 3, {"dx1 - 1/2*x2 dx3", "dx2 + 1/2*x1 dx3"}); }

SRStructure grushin() { return make("grushin", 2, {"dx1", "x1 dx2"}); }

SRStructure engel() { return make("engel", 4, {"dx1", "dx2 + x1 dx3 + 1/2*x1^2 dx4"}); }

SRStructure martinet() { return make("martinet", 3, {"dx1 + 1/2*x2^2 dx3", "dx2"}); }

SRStructure step3alpha(const Rational& alpha)
{
    SRStructure s = make("step3alpha(alpha=" + alpha.get_str() + ")", 6, {"dx1", "dx2", "dx3 + x1 dx4 + x2 dx5"});
    Exponent e(6, 0);
    e[0] = 2;
    Multinomial w = Multinomial::monomial(e, Rational(1, 2));
    e[0] = 0;
    e[1] = 2;
    w.add_term(e, alpha / 2);
    s.frame[2][5] = w;
    return s;
}

namespace {

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// "step3alpha(alpha=-1)" -> ("step3alpha", {alpha: -1})
std::pair<std::string, std::map<std::string, std::string>> split_builtin(const std::string& spec)
{
    std::map<std::string, std::string> params;
    auto open = spec.find('(');
    if (open == std::string::npos || spec.back() != ')') return {lower(trim(spec)), params};
    std::string inner = spec.substr(open + 1, spec.size() - open - 2);
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw InputError("bad built-in parameter '" + item + "'");
        params[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
    return {lower(trim(spec.substr(0, open))), params};
}

const std::vector<std::string>& builtin_names()
{
    static const std::vector<std::string> names{"heisenberg", "grushin", "engel", "martinet", "step3alpha"};
    return names;
}

}  // namespace

bool is_builtin_structure(const std::string& spec)
{
    auto name = split_builtin(spec).first;
    const auto& names = builtin_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

SRStructure load_structure(const std::string& spec, const std::map<std::string, std::string>& params)
{
    if (is_builtin_structure(spec)) {
        auto [name, inline_params] = split_builtin(spec);
        auto merged = params;
        for (const auto& [k, v] : inline_params) merged[k] = v;
        auto known = [&](std::initializer_list<const char*> keys) {
            for (const auto& [k, v] : merged) {
                bool ok = false;
                for (const char* key : keys) ok = ok || k == key;
                if (!ok) throw InputError("unknown parameter '" + k + "' for built-in '" + name + "'");
            }
        };
        if (name == "step3alpha") {
            known({"alpha"});
            auto it = merged.find("alpha");
            return step3alpha(it == merged.end() ? Rational(-1) : parse_rational(it->second));
        }
        known({});
        if (name == "heisenberg") return heisenberg();
        if (name == "grushin") return grushin();
        if (name == "engel") return engel();
        return martinet();
    }
    std::ifstream in(spec);
    if (!in) throw InputError("'" + spec + "' is neither a built-in structure nor a readable file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_structure(buf.str());
}

VectorField parse_field(const std::string& rhs, int dim)
{
    if (trim(rhs) == "0") return VectorField(dim);
    // make the implicit product "coef dx<i>" explicit
    std::string text;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        if (rhs.compare(i, 2, "dx") == 0 && i + 2 < rhs.size() && std::isdigit(static_cast<unsigned char>(rhs[i + 2]))) {
            auto last = text.find_last_not_of(" \t");
            if (last != std::string::npos && std::string("+-*(").find(text[last]) == std::string::npos) text += "*";
        }
        text += rhs[i];
    }
    Multinomial p = parse_polynomial(text, 2 * dim, {{"dx", dim}, {"x", 0}});
    std::vector<Multinomial> comps(static_cast<std::size_t>(dim), Multinomial(dim));
    for (const auto& [e, c] : p.terms()) {
        int which = -1;
        for (int i = 0; i < dim; ++i) {
            auto k = e[static_cast<std::size_t>(dim + i)];
            if (k == 0) continue;
            if (k > 1 || which >= 0) throw InputError("field '" + rhs + "' is not linear in dx");
            which = i;
        }
        if (which < 0) throw InputError("field '" + rhs + "' has a term without dx<i>");
        comps[static_cast<std::size_t>(which)].add_term(Exponent(e.begin(), e.begin() + dim), c);
    }
    return VectorField(std::move(comps));
}

namespace {

Box parse_domain(const std::string& text, int dim)
{
    Box b{Eigen::VectorXd(dim), Eigen::VectorXd(dim)};
    int k = 0;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find('[', pos);
        if (open == std::string::npos) break;
        auto close = text.find(']', open);
        if (close == std::string::npos) throw InputError("domain: unbalanced '['");
        std::string inner = text.substr(open + 1, close - open - 1);
        auto comma = inner.find(',');
        if (comma == std::string::npos) throw InputError("domain: interval needs 'lo,hi'");
        if (k >= dim) throw InputError("domain: too many intervals");
        try {
            b.lo[k] = std::stod(trim(inner.substr(0, comma)));
            b.hi[k] = std::stod(trim(inner.substr(comma + 1)));
        } catch (const std::exception&) {
            throw InputError("domain: bad number in '" + inner + "'");
        }
        if (!(b.lo[k] < b.hi[k])) throw InputError("domain: empty interval");
        ++k;
        pos = close + 1;
    }
    if (k != dim) throw InputError("domain: expected " + std::to_string(dim) + " intervals");
    return b;
}

}  // namespace

SRStructure parse_structure(const std::string& text)
{
    SRStructure s;
    int rank = -1;
    std::string domain_text;
    std::map<int, std::string> fields;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError("structure line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "dim") s.dim = std::stoi(value);
            else if (key == "rank") rank = std::stoi(value);
            else if (key == "name") s.name = value;
            else if (key == "domain") domain_text = value;
            else if (key.size() > 1 && key[0] == 'X' && std::all_of(key.begin() + 1, key.end(), ::isdigit))
                fields[std::stoi(key.substr(1))] = value;
            else throw InputError("unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw InputError("structure line " + std::to_string(lineno) + ": bad integer '" + value + "'");
        }
    }
    if (s.dim <= 0) throw InputError("structure: missing or invalid 'dim'");
    if (rank <= 0) rank = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != rank) throw InputError("structure: rank does not match the number of fields");
    for (int k = 1; k <= rank; ++k) {
        auto it = fields.find(k);
        if (it == fields.end()) throw InputError("structure: missing field X" + std::to_string(k));
        s.frame.push_back(parse_field(it->second, s.dim));
    }
    if (!domain_text.empty()) s.domain = parse_domain(domain_text, s.dim);
    if (s.name.empty()) s.name = "structure";
    s.validate();
    return s;
}

std::string to_text(const SRStructure& s)
{
    std::ostringstream os;
    os << "name = " << s.name << "\n";
    os << "dim = " << s.dim << "\n";
    os << "rank = " << s.rank() << "\n";
    if (s.domain) {
        os << "domain = ";
        char buf[64];
        for (int i = 0; i < s.dim; ++i) {
            if (i) os << "x";
            std::snprintf(buf, sizeof buf, "[%.17g,%.17g]", s.domain->lo[i], s.domain->hi[i]);
            os << buf;
        }
        os << "\n";
    }
    for (int i = 0; i < s.rank(); ++i) os << "X" << (i + 1) << " = " << to_string(s.frame[static_cast<std::size_t>(i)]) << "\n";
    return os.str();
}

}  // namespace subrie
