// ifs: command-line front end for construction, certification, branch runs
// and blender/mixing experiments. Every run writes <out>.manifest.json.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ifs/affine_construction.hpp"
#include "ifs/error.hpp"
#include "ifs/geometry.hpp"
#include "ifs/hutchinson.hpp"
#include "ifs/minimality.hpp"
#include "ifs/parallel.hpp"
#include "ifs/serialization.hpp"
#include "ifs/symbolic.hpp"

using namespace ifs;

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Input {
    std::string path;
    std::string bytes;
    json doc;
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
    return h;
}

std::string hex(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

Input read_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    Input r{path, ss.str(), {}};
    try {
        r.doc = json::parse(r.bytes);
    } catch (const json::exception& e) {
        throw UsageError("input is not valid JSON: " + path + " (" + e.what() + ")");
    }
    return r;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write output file: " + path);
    out << text;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string("cannot parse ") + what + ": " + text);
        }
    }
    if (v.empty()) throw UsageError(std::string("empty ") + what);
    return v;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

/// "c1,…,cm,r" -> ball.
Balld parse_ball(const std::string& text, const char* what) {
    auto v = parse_list(text, what);
    if (v.size() < 2) throw UsageError(std::string(what) + " needs centre coordinates and a radius");
    const double r = v.back();
    v.pop_back();
    return Balld{to_vec(v), r};
}

/// "box:c1,…:h1,…" or "ball:c1,…:r".
Region parse_domain(const std::string& text) {
    const auto first = text.find(':');
    const auto second = text.find(':', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos) throw UsageError("domain must be auto, box:C:H or ball:C:R");
    const std::string kind = text.substr(0, first);
    const Vec c = to_vec(parse_list(text.substr(first + 1, second - first - 1), "domain centre"));
    const Vec rest = to_vec(parse_list(text.substr(second + 1), "domain size"));
    if (kind == "box") {
        if (rest.size() != c.size()) throw UsageError("box halfwidths must match the centre dimension");
        return Region(Boxd{c, rest});
    }
    if (kind == "ball") {
        if (rest.size() != 1) throw UsageError("ball needs a single radius");
        return Region(Balld{c, rest[0]});
    }
    throw UsageError("unknown domain kind: " + kind);
}

PerturbModel parse_model(const std::string& s) {
    if (s == "affine") return PerturbModel::Affine;
    if (s == "bump") return PerturbModel::Bump;
    throw UsageError("model must be affine or bump");
}

/// A params document, a certificate or a bare {dim, maps} family.
MapFamily family_of(const json& doc) {
    if (doc.contains("family")) return family_from_json(doc.at("family"));
    if (doc.contains("maps")) return family_from_json(doc);
    throw UsageError("input holds neither a family nor parameters");
}

MinimalityCertificate certificate_of(const Input& in) {
    if (!in.doc.contains("checks")) throw UsageError("input is not a certificate: " + in.path);
    return certificate_from_json(in.doc);
}

void require_dim(const Vec& v, Eigen::Index m, const char* what) {
    if (v.size() != m) throw UsageError(std::string(what) + " has dimension " + std::to_string(v.size()) +
                                        ", expected " + std::to_string(m));
}

/// Resolved run configuration; written next to every output as the manifest.
struct Run {
    std::string command;
    json config = json::object();
    std::vector<const Input*> inputs;

    json manifest() const {
        json files = json::array();
        for (const auto* in : inputs) files.push_back({{"path", in->path}, {"fnv1a64", hex(fnv1a(in->bytes))}});
        return {{"command", command}, {"config", config}, {"inputs", files}, {"version", IFS_VERSION}};
    }

    /// JSON result to `out`, or to stdout when `out` is empty.
    void emit(const std::string& out, const json& result) const {
        const std::string text = result.dump(2) + "\n";
        if (out.empty()) {
            std::cout << text;
            return;
        }
        write_file(out, text);
        write_file(out + ".manifest.json", manifest().dump(2) + "\n");
    }

    void emit_text(const std::string& out, const std::string& text) const {
        if (out.empty()) {
            std::cout << text;
            return;
        }
        write_file(out, text);
        write_file(out + ".manifest.json", manifest().dump(2) + "\n");
    }
};

void report_failure(const std::string& what, const json& detail) {
    std::cerr << json{{"error", what}, {"kind", "verification"}, {"detail", detail}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iterated function systems: affine blending construction, minimality certificates,\n"
                 "dense branches under per-step perturbation, and symbolic blender experiments."};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", IFS_VERSION);

    unsigned threads = 0;
    std::uint64_t seed = 0;
    app.add_option("--threads", threads, "Worker thread cap (0: all cores); results do not depend on it");
    app.add_option("--seed", seed, "Seed for every random draw (IFS_SEED overrides)");

    auto setup = [&] {
        if (const char* env = std::getenv("IFS_SEED")) {
            try {
                std::size_t used = 0;
                seed = std::stoull(env, &used);
                if (env[used] != '\0') throw std::invalid_argument(env);
            } catch (const std::exception&) {
                throw UsageError(std::string("IFS_SEED is not an unsigned integer: ") + env);
            }
        }
        set_thread_limit(threads);
    };

    Run run;
    std::string out;
    int exit_code = kPass;

    // construct
    auto* construct = app.add_subcommand(
        "construct", "Search parameters (r, s, a, v) of the blending maps S, T for dimension m and emit\n"
                     "them with the maps S, T and the family {S, S∘T}; the search stops at the first r\n"
                     "that satisfies every inequality and covers the box B by its images");
    int dim = 2;
    double spacing = 0;
    bool no_gate = false;
    construct->add_option("--dim", dim, "Dimension m ≥ 2")->required()->check(CLI::Range(2, 16));
    construct->add_option("--spacing", spacing, "Covering grid spacing (0: 0.01 for m ≤ 3, 0.05 above)");
    construct->add_flag("--no-pipeline-gate", no_gate, "m = 2: skip the certificate and strip-resolution gates");
    construct->add_option("--out", out, "Output params JSON (stdout if omitted)");
    construct->callback([&] {
        setup();
        run.command = "construct";
        run.config = {{"dim", dim}, {"spacing", spacing}, {"pipeline_gate", !no_gate}};
        SearchOptions opt;
        opt.spacing = spacing;
        opt.pipeline_gate = !no_gate;
        run.emit(out, params_document(find_parameters(dim, opt)));
    });

    // check
    auto* check = app.add_subcommand(
        "check", "Re-check the parameter inequalities, the fixed point of T inside B, and the\n"
                 "covering of B by S(B) ∪ S∘T(B) on a grid; exit 1 names every failure");
    std::string input;
    check->add_option("params", input, "Params JSON from construct")->required();
    check->add_option("--spacing", spacing, "Covering grid spacing (0: default for m)");
    check->add_option("--out", out, "Output report JSON (stdout if omitted)");
    check->callback([&] {
        setup();
        const Input in = read_input(input);
        run.command = "check";
        run.inputs = {&in};
        const AffineParams p = params_from_json(in.doc);
        const double h = spacing > 0 ? spacing : default_spacing(p.m);
        run.config = {{"params", input}, {"spacing", h}};
        const auto conditions = check_conditions(p);
        const auto cover = box_covering(p, h);
        const bool passed = conditions.all_pass() && cover.covered;
        run.emit(out, {{"params", to_json(p)}, {"conditions", to_json(conditions)}, {"covering", to_json(cover)},
                       {"passed", passed}});
        if (!cover.covered && !out.empty()) {
            PointCloud w(p.m);
            for (const auto& x : cover.witnesses) w.push_back(x);
            std::ofstream f(out + ".witnesses.csv");
            write_csv(f, w);
        }
        if (!passed) {
            auto failures = conditions.failures();
            if (!cover.covered) failures.push_back("covering");
            report_failure("parameter check failed", {{"failures", failures}});
            exit_code = kFail;
        }
    });

    // attractor
    auto* attractor_cmd = app.add_subcommand(
        "attractor", "Approximate the attractor of the family by Hutchinson iteration (deterministic)\n"
                     "or by the chaos game; writes a point CSV");
    double tol = 0.01;
    std::string method = "deterministic";
    std::size_t points = 1000000, burn_in = 1000;
    attractor_cmd->add_option("input", input, "Params, certificate or family JSON")->required();
    attractor_cmd->add_option("--tol", tol, "Hausdorff tolerance of the deterministic iteration");
    attractor_cmd->add_option("--method", method, "deterministic | chaos")->check(CLI::IsMember({"deterministic", "chaos"}));
    attractor_cmd->add_option("--points", points, "Chaos game: number of points");
    attractor_cmd->add_option("--burn-in", burn_in, "Chaos game: discarded initial steps");
    attractor_cmd->add_option("--out", out, "Output CSV (stdout if omitted)");
    attractor_cmd->callback([&] {
        setup();
        const Input in = read_input(input);
        run.command = "attractor";
        run.inputs = {&in};
        run.config = {{"input", input}, {"method", method}, {"seed", seed}};
        const MapFamily family = family_of(in.doc);
        const Balld ball = absorbing_ball(family, Balld{Vec::Zero(family.dim()), 1e-9});
        PointCloud cloud;
        if (method == "chaos") {
            run.config["points"] = points;
            run.config["burn_in"] = burn_in;
            cloud = chaos_game(family, ball.center, points, burn_in, seed);
        } else {
            run.config["tol"] = tol;
            cloud = attractor(family, ball, tol);
        }
        std::ostringstream os;
        write_csv(os, cloud);
        run.emit_text(out, os.str());
    });

    // fixed-points
    auto* fixed = app.add_subcommand(
        "fixed-points", "Fixed points of every composition of n maps of the family (the set Y_n)");
    std::size_t n = 8;
    fixed->add_option("input", input, "Params, certificate or family JSON")->required();
    fixed->add_option("--n", n, "Word length");
    fixed->add_option("--out", out, "Output CSV (stdout if omitted); columns word, x1, …");
    fixed->callback([&] {
        setup();
        const Input in = read_input(input);
        run.command = "fixed-points";
        run.inputs = {&in};
        run.config = {{"input", input}, {"n", n}};
        const MapFamily family = family_of(in.doc);
        const auto set = fixed_point_set(family, n);
        std::ostringstream os;
        os << "word";
        for (Eigen::Index i = 0; i < family.dim(); ++i) os << ",x" << (i + 1);
        os << "\n";
        char buf[32];
        for (std::size_t i = 0; i < set.points.size(); ++i) {
            os << word_label(family, set.words[i]);
            for (Eigen::Index k = 0; k < family.dim(); ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", set.points[i][k]);
                os << ',' << buf;
            }
            os << "\n";
        }
        run.emit_text(out, os.str());
    });

    // certify
    auto* certify_cmd = app.add_subcommand(
        "certify", "Verify the hypotheses of strong robust minimality on a domain D: contraction,\n"
                   "covering of D by the images, a Lebesgue number, and δ/2-density of the fixed\n"
                   "points of words of some length n₀; --translated certifies the family\n"
                   "x ↦ c·x + δ·b_i built from a λ-cover of the unit ball");
    std::string domain_text = "auto";
    std::size_t max_len = 12;
    bool translated = false;
    double lambda = 0.6, contraction = 0.8, delta = 0.5;
    certify_cmd->add_option("input", input, "Params or family JSON (omit with --translated)");
    certify_cmd->add_option("--domain", domain_text, "auto | box:C:H | ball:C:R (C, H comma lists)");
    certify_cmd->add_option("--spacing", spacing, "Grid spacing (0: default for m)");
    certify_cmd->add_option("--max-word-length", max_len, "Longest n₀ tried");
    certify_cmd->add_flag("--translated", translated, "Certify the translated family instead of an input file");
    certify_cmd->add_option("--dim", dim, "--translated: dimension");
    certify_cmd->add_option("--lambda", lambda, "--translated: cover radius λ");
    certify_cmd->add_option("--contraction", contraction, "--translated: contraction c ≥ λ");
    certify_cmd->add_option("--delta", delta, "--translated: domain radius δ");
    certify_cmd->add_option("--out", out, "Output certificate JSON (stdout if omitted)");
    certify_cmd->callback([&] {
        setup();
        std::optional<Input> in;
        run.command = "certify";
        MapFamily family;
        std::optional<Region> domain;
        if (translated) {
            if (!input.empty()) throw UsageError("--translated takes no input file");
            run.config = {{"translated", true}, {"dim", dim}, {"lambda", lambda}, {"contraction", contraction},
                          {"delta", delta}};
            const auto tf = translated_family(cover_unit_ball(lambda, dim, delta), contraction);
            family = tf.family;
            domain = tf.domain;
        } else {
            if (input.empty()) throw UsageError("certify needs an input file or --translated");
            in = read_input(input);
            run.inputs = {&*in};
            run.config = {{"input", input}};
            family = family_of(in->doc);
            if (domain_text == "auto") {
                if (!in->doc.contains("params")) throw UsageError("--domain auto needs a params document");
                domain = Region(box_B(params_from_json(in->doc)));
            }
        }
        if (domain_text != "auto") domain = parse_domain(domain_text);
        require_dim(domain->center(), family.dim(), "domain");
        CertifyOptions opt;
        opt.spacing = spacing;
        opt.max_word_length = max_len;
        run.config["domain"] = to_json(*domain);
        run.config["spacing"] = spacing;
        run.config["max_word_length"] = max_len;
        const auto cert = certify(family, *domain, opt);
        run.emit(out, to_json(cert));
        if (!cert.passed) {
            const auto* f = cert.failed_check();
            report_failure("certificate failed", {{"check", f ? f->name : ""}, {"detail", f ? f->detail : json()}});
            exit_code = kFail;
        }
    });

    // branch
    auto* branch = app.add_subcommand(
        "branch", "Build a dense-branch word from a start point into a target ball, with a\n"
                  "different ε-perturbed family at every step; the plan records the word, the\n"
                  "per-step endpoints and the phase of every step");
    std::string from, target_text, model = "affine";
    double eps = 0;
    std::size_t start_step = 1, sample = 100;
    branch->add_option("certificate", input, "Certificate JSON from certify")->required();
    branch->add_option("--from", from, "Start point x1,…,xm")->required();
    branch->add_option("--target", target_text, "Target ball c1,…,cm,r")->required();
    branch->add_option("--eps", eps, "Per-step perturbation size");
    branch->add_option("--model", model, "affine | bump")->check(CLI::IsMember({"affine", "bump"}));
    branch->add_option("--start-step", start_step, "Index of the first family used");
    branch->add_option("--sample", sample, "Points of D replayed into the target");
    branch->add_option("--out", out, "Output plan JSON (stdout if omitted)");
    branch->callback([&] {
        setup();
        const Input in = read_input(input);
        run.command = "branch";
        run.inputs = {&in};
        const auto cert = certificate_of(in);
        const Vec x = to_vec(parse_list(from, "start point"));
        const Balld target = parse_ball(target_text, "target");
        require_dim(x, cert.family.dim(), "start point");
        require_dim(target.center, cert.family.dim(), "target");
        run.config = {{"certificate", input}, {"from", to_json(x)}, {"target", to_json(target)}, {"eps", eps},
                      {"model", model}, {"seed", seed}, {"start_step", start_step}, {"sample", sample}};
        const FamilySequence seq(cert.family, cert.working_domain, eps, parse_model(model), seed);
        const auto plan = dense_branch(x, target, seq, cert, start_step);
        PointCloud pts(cert.family.dim());
        Rng rng(mix_seed(seed, 0x5a));
        for (std::size_t i = 0; i < sample; ++i) pts.push_back(random_point(cert.domain, rng));
        const auto images = replay(plan, seq, pts);
        std::size_t inside = 0;
        for (std::size_t i = 0; i < images.size(); ++i) inside += target.contains(images[i]);
        const bool end_ok = target.contains(plan.end());
        json doc = to_json(plan, cert.family);
        doc["replay"] = {{"sample", sample}, {"inside", inside}};
        doc["passed"] = end_ok && inside == images.size();
        run.emit(out, doc);
        if (!doc["passed"].get<bool>()) {
            report_failure("branch misses the target", {{"end", to_json(plan.end())}, {"inside", inside}});
            exit_code = kFail;
        }
    });

    // orbit
    auto* orbit = app.add_subcommand(
        "orbit", "Chain dense branches from a start point through a seeded list of target balls");
    double radius = 0.05;
    std::size_t count = 50;
    orbit->add_option("certificate", input, "Certificate JSON")->required();
    orbit->add_option("--from", from, "Start point x1,…,xm")->required();
    orbit->add_option("--radius", radius, "Target radius");
    orbit->add_option("--count", count, "Number of targets, centred uniformly in D");
    orbit->add_option("--eps", eps, "Per-step perturbation size");
    orbit->add_option("--model", model, "affine | bump")->check(CLI::IsMember({"affine", "bump"}));
    orbit->add_option("--out", out, "Output JSON (stdout if omitted)");
    orbit->callback([&] {
        setup();
        const Input in = read_input(input);
        run.command = "orbit";
        run.inputs = {&in};
        const auto cert = certificate_of(in);
        const Vec x = to_vec(parse_list(from, "start point"));
        require_dim(x, cert.family.dim(), "start point");
        run.config = {{"certificate", input}, {"from", to_json(x)}, {"radius", radius}, {"count", count},
                      {"eps", eps}, {"model", model}, {"seed", seed}};
        const FamilySequence seq(cert.family, cert.working_domain, eps, parse_model(model), seed);
        const auto targets = random_targets(cert.domain, count, radius, mix_seed(seed, 0x7a));
        const auto plans = dense_orbit(x, seq, cert, targets);
        json list = json::array();
        std::size_t hit = 0, steps = 0;
        for (std::size_t i = 0; i < plans.size(); ++i) {
            list.push_back(to_json(plans[i], cert.family));
            hit += targets[i].contains(plans[i].end());
            steps += plans[i].word.size();
        }
        run.emit(out, {{"plans", list}, {"targets_hit", hit}, {"steps", steps}, {"passed", hit == plans.size()}});
        if (hit != plans.size()) {
            report_failure("orbit missed targets", {{"hit", hit}, {"targets", plans.size()}});
            exit_code = kFail;
        }
    });

    // trial
    auto* trial = app.add_subcommand(
        "trial", "Strong-robustness trial: for seeded ε-perturbed family sequences, chain dense\n"
                 "branches from random starts through random targets and check success, step\n"
                 "bounds and replay of a sample of D");
    std::size_t trials = 100, n_targets = 100;
    trial->add_option("certificate", input, "Certificate JSON")->required();
    trial->add_option("--eps", eps, "Per-step perturbation size");
    trial->add_option("--trials", trials, "Number of seeded sequences");
    trial->add_option("--targets", n_targets, "Targets per sequence");
    trial->add_option("--radius", radius, "Target radius");
    trial->add_option("--model", model, "affine | bump")->check(CLI::IsMember({"affine", "bump"}));
    trial->add_option("--out", out, "Output report JSON (stdout if omitted)");
    trial->callback([&] {
        setup();
        const Input in = read_input(input);
        run.command = "trial";
        run.inputs = {&in};
        const auto cert = certificate_of(in);
        run.config = {{"certificate", input}, {"eps", eps}, {"trials", trials}, {"targets", n_targets},
                      {"radius", radius}, {"model", model}, {"seed", seed}};
        const auto targets = random_targets(cert.domain, n_targets, radius, mix_seed(seed, 0x7a));
        TrialOptions opt;
        opt.model = parse_model(model);
        const auto rep = strong_trial(cert, eps, trials, targets, seed, opt);
        run.emit(out, to_json(rep));
        if (!rep.precheck_passed || rep.successes != rep.branches) {
            report_failure(rep.precheck_passed ? "trial had failures" : "margin precheck failed",
                           {{"reason", rep.reason}, {"successes", rep.successes}, {"branches", rep.branches}});
            exit_code = kFail;
        }
    });

    // blender
    auto* blender = app.add_subcommand(
        "blender", "Symbolic blender: skew product over the full shift with the family as fiber\n"
                   "maps (E_in = certified domain, E_out = absorbing ball); refines strips to\n"
                   "n_max and checks that strip bounds cover E_in with radius ≤ 2h");
    std::size_t window = 1, nmax = 40;
    double h = 0.02, rate = 2.0;
    std::string strips_csv;
    blender->add_option("certificate", input, "Certificate or family JSON with a domain")->required();
    blender->add_option("--window", window, "Window length w of the fiber selector")->check(CLI::Range(1, 5));
    blender->add_option("--nmax", nmax, "Generations");
    blender->add_option("--eps", eps, "Perturbation of the windowed fiber maps");
    blender->set_help_flag("--help", "Print this help message and exit");
    blender->add_option("--h", h, "Grid spacing on E_in");
    blender->add_option("--rate", rate, "Nominal base expansion for the domination check");
    blender->add_option("--strips", strips_csv, "Write the last generation's strips to this CSV");
    blender->add_option("--out", out, "Output JSON (stdout if omitted)");
    blender->callback([&] {
        setup();
        const Input in = read_input(input);
        run.command = "blender";
        run.inputs = {&in};
        if (!in.doc.contains("domain")) throw UsageError("blender input needs a domain (use a certificate)");
        const MapFamily family = family_of(in.doc);
        const Region inner = region_from_json(in.doc.at("domain"));
        run.config = {{"input", input}, {"window", window}, {"nmax", nmax}, {"eps", eps}, {"h", h},
                      {"rate", rate}, {"seed", seed}, {"strips", strips_csv}};
        const SkewProduct p = blender_product(family, inner, window, eps, seed);
        std::vector<Strip> last;
        const auto rep = blender_verify(p, nmax, h, {}, strips_csv.empty() ? nullptr : &last);
        const bool domination = check_domination(p, rate);
        json product = {{"family", to_json(family)}, {"inner", to_json(inner)}, {"outer", to_json(p.outer)},
                        {"window", window}, {"eps", eps}, {"seed", seed}};
        json report = to_json(rep);
        report["domination"] = domination;
        run.emit(out, {{"product", product}, {"report", report}, {"passed", rep.passed && domination}});
        if (!strips_csv.empty()) {
            std::ofstream f(strips_csv);
            if (!f) throw UsageError("cannot write output file: " + strips_csv);
            write_strips_csv(f, last);
        }
        if (!(rep.passed && domination)) {
            report_failure("blender check failed",
                           {{"precheck", rep.precheck_detail}, {"domination", domination},
                            {"max_radius", rep.generations.empty() ? 0.0 : rep.generations.back().max_radius}});
            exit_code = kFail;
        }
    });

    // mix
    auto* mix = app.add_subcommand(
        "mix", "Topological-mixing probe on the symbolic model: sample cylinder U, iterate the\n"
               "skew product, and find the first N after which V is hit at every time up to the\n"
               "horizon; without --u/--v, probes seeded random cylinder pairs");
    std::string u_text, v_text;
    std::size_t horizon = 60, samples = 20000, max_samples = 1000000, pairs = 20, length = 3, mix_n = 30;
    double fiber_radius = 0.1;
    mix->add_option("blender", input, "Blender JSON from the blender command")->required();
    mix->add_option("--u", u_text, "Cylinder word:c1,…,cm,r (symbols 1-based)");
    mix->add_option("--v", v_text, "Cylinder word:c1,…,cm,r");
    mix->add_option("--n", mix_n, "Largest acceptable mixing time N");
    mix->add_option("--horizon", horizon, "Last time checked");
    mix->add_option("--samples", samples, "Sample points drawn in U per batch");
    mix->add_option("--max-samples", max_samples, "Sample budget; batches stop once every n in [N, horizon] has a hit");
    mix->add_option("--pairs", pairs, "Random pairs when --u/--v are omitted");
    mix->add_option("--length", length, "Random pairs: prefix length");
    mix->add_option("--radius", fiber_radius, "Random pairs: fiber ball radius");
    mix->add_option("--out", out, "Output JSON (stdout if omitted)");
    mix->callback([&] {
        setup();
        const Input in = read_input(input);
        run.command = "mix";
        run.inputs = {&in};
        const json& prod = in.doc.at("product");
        const SkewProduct p = blender_product(family_from_json(prod.at("family")), region_from_json(prod.at("inner")),
                                              prod.at("window").get<std::size_t>(), prod.at("eps").get<double>(),
                                              prod.at("seed").get<std::uint64_t>());
        run.config = {{"blender", input}, {"n", mix_n}, {"horizon", horizon}, {"samples", samples}, {"max_samples", max_samples}, {"seed", seed}};
        auto parse_cylinder = [&](const std::string& text) {
            const auto colon = text.find(':');
            if (colon == std::string::npos) throw UsageError("cylinder must be word:c1,…,cm,r");
            Cylinder c;
            try {
                c.prefix = SymbolWord::parse(text.substr(0, colon), p.alphabet);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            c.fiber = parse_ball(text.substr(colon + 1), "cylinder fiber ball");
            require_dim(c.fiber.center, p.dim(), "cylinder fiber ball");
            return c;
        };
        std::vector<std::pair<Cylinder, Cylinder>> list;
        if (!u_text.empty() || !v_text.empty()) {
            if (u_text.empty() || v_text.empty()) throw UsageError("--u and --v go together");
            list.emplace_back(parse_cylinder(u_text), parse_cylinder(v_text));
            run.config["u"] = u_text;
            run.config["v"] = v_text;
        } else {
            run.config["pairs"] = pairs;
            run.config["length"] = length;
            run.config["radius"] = fiber_radius;
            for (std::size_t i = 0; i < pairs; ++i)
                list.emplace_back(random_cylinder(p, length, fiber_radius, mix_seed(seed, i, 1)),
                                  random_cylinder(p, length, fiber_radius, mix_seed(seed, i, 2)));
        }
        json results = json::array();
        bool all = true;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& [u, v] = list[i];
            const auto rep = mixing_probe(p, u, v, mix_n, horizon, {samples, mix_seed(seed, i, 3), max_samples});
            json r = to_json(rep);
            r["u"] = {{"word", u.prefix.str()}, {"fiber", to_json(u.fiber)}};
            r["v"] = {{"word", v.prefix.str()}, {"fiber", to_json(v.fiber)}};
            results.push_back(r);
            all = all && rep.mixing;
        }
        run.emit(out, {{"pairs", results}, {"passed", all}});
        if (!all) {
            report_failure("mixing not observed", {{"n", mix_n}, {"horizon", horizon}});
            exit_code = kFail;
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "usage"}}.dump() << "\n";
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "usage"}}.dump() << "\n";
        return kUsage;
    } catch (const json::exception& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "input"}}.dump() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "verification"}, {"detail", e.detail()}}.dump() << "\n";
        return kFail;
    }
    return exit_code;
}
