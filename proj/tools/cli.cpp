#include "cli.hpp"

#include "anchorlab/battery.hpp"
#include "anchorlab/causal.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/estimators.hpp"
#include "anchorlab/modelsel.hpp"
#include "anchorlab/scm.hpp"
#include "anchorlab/sparse.hpp"
#include "anchorlab/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace anchorlab::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kDigits = 12;

struct Options {
    std::string data;
    std::string config;
    std::string scm;
    std::string gamma = "1";
    std::string lambda;
    std::string alpha = "0.05,0.5,0.9";
    std::string grid;
    std::string shift;
    std::string tgrid;
    std::string gamma_range = "0,1";
    std::string battery;
    std::string format = "csv";
    std::string out;
    Index folds = 5;
    Index n = 0;
    Index grid_size = 21;
    std::optional<std::uint64_t> seed;
};

/// Verification failure: reported, exit code 4.
struct VerificationFailed {};

std::string num(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return format_number(x, kDigits);
}

/// Value for JSON output, rounded to the output precision.
json jnum(double x) {
    if (!std::isfinite(x)) return num(x);
    return std::strtod(format_number(x, kDigits).c_str(), nullptr);
}

json jvec(const VectorXd& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(jnum(v(i)));
    return out;
}

json jvec(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(jnum(x));
    return out;
}

double parse_real(const std::string& raw) {
    std::string s;
    for (char c : raw) {
        if (c != ' ' && c != '\t') s.push_back(c);
    }
    if (s == "inf" || s == "+inf" || s == "Inf" || s == "infinity") return kInfiniteGamma;
    if (s.empty()) throw InvalidConfig("empty number");
    std::istringstream in(s);
    in.imbue(std::locale::classic());
    double value = 0.0;
    in >> value;
    if (in.fail() || !in.eof() || !std::isfinite(value)) throw InvalidConfig("cannot parse number '" + raw + "'");
    return value;
}

std::optional<double> optional_real(const std::string& text) {
    if (text.empty()) return std::nullopt;
    return parse_real(text);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidConfig("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw InvalidConfig("failed writing '" + path.string() + "'");
}

fs::path output_dir(const Options& o) {
    if (o.out.empty()) throw InvalidConfig("--out is required");
    fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidConfig("cannot create output directory '" + o.out + "': " + ec.message());
    return dir;
}

void require_format(const Options& o) {
    if (o.format != "csv" && o.format != "json") throw InvalidConfig("--format must be csv or json");
}

std::uint64_t require_seed(const Options& o, const char* who) {
    if (!o.seed) throw InvalidConfig(std::string(who) + " is stochastic and needs --seed");
    return *o.seed;
}

AnchorDataset load_data(const Options& o) {
    if (o.data.empty()) throw InvalidConfig("--data is required");
    if (o.config.empty()) throw InvalidConfig("--config (column roles) is required with --data");
    return center(read_csv(o.data, read_data_config(o.config)));
}

std::vector<double> gamma_list(const Options& o, const std::vector<double>& fallback) {
    if (o.grid.empty()) return fallback;
    std::vector<double> grid = parse_real_list(o.grid);
    if (grid.empty()) throw InvalidConfig("--grid is empty");
    return grid;
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + row[j];
        out += "\n";
    }
    return out;
}

json gamma_json(double gamma) { return jnum(gamma); }

int cmd_fit(const Options& o) {
    const AnchorDataset ds = load_data(o);
    const double gamma = parse_real(o.gamma);
    const std::optional<double> lambda = optional_real(o.lambda);
    const fs::path dir = output_dir(o);

    AnchorFit fit;
    std::string estimator;
    if (lambda) {
        fit = fit_anchor_lasso(ds, gamma, *lambda);
        estimator = "anchor_lasso";
    } else {
        fit = fit_anchor_or_iv(ds, gamma);
        estimator = fit.is_iv() ? "iv" : "anchor";
    }

    std::vector<std::vector<std::string>> rows;
    json coefs = json::object();
    for (Index k = 0; k < ds.d(); ++k) {
        const std::string& name = ds.predictor_names[static_cast<std::size_t>(k)];
        rows.push_back({name, num(fit.coefficients(k))});
        coefs[name] = jnum(fit.coefficients(k));
    }
    const double intercept = fit.y_mean - fit.x_means.dot(fit.coefficients);

    json doc;
    doc["estimator"] = estimator;
    doc["gamma"] = gamma_json(gamma);
    doc["lambda"] = lambda ? jnum(*lambda) : json(nullptr);
    doc["objective"] = jnum(fit.objective);
    doc["coefficients"] = coefs;
    doc["intercept"] = jnum(intercept);
    doc["diagnostics"] = {{"n", ds.n()},
                          {"d", ds.d()},
                          {"q", ds.q()},
                          {"levels", static_cast<Index>(ds.level_labels.size())},
                          {"iterations", fit.iterations},
                          {"tolerance", jnum(fit.tolerance)},
                          {"converged", fit.converged}};
    write_file(dir / "coefficients.csv", csv_table({"coordinate", "estimate"}, rows));
    write_file(dir / "fit.json", doc.dump(2) + "\n");
    if (!fit.converged) {
        std::cerr << "NoConvergence: coordinate descent stopped after " << fit.iterations
                  << " sweeps with KKT violation " << num(fit.tolerance) << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_path(const Options& o) {
    require_format(o);
    const bool from_data = !o.data.empty();
    if (!from_data && o.scm.empty()) throw InvalidConfig("path needs --data or --scm");
    std::optional<LinearScm> scm;
    if (!o.scm.empty()) scm = load_scm(o.scm);
    const std::vector<double> grid = gamma_list(o, default_gamma_grid());
    const std::optional<double> lambda = optional_real(o.lambda);
    const fs::path dir = output_dir(o);

    std::vector<VectorXd> coefs(grid.size());
    std::vector<std::string> names;
    bool converged = true;
    if (from_data) {
        const AnchorDataset ds = load_data(o);
        names = ds.predictor_names;
        if (scm && scm->d != ds.d()) throw DimensionMismatch("--scm has a different number of predictors than --data");
        std::vector<char> ok(grid.size(), 1);
        parallel_for(grid.size(), [&](std::size_t g) {
            const AnchorFit fit = lambda ? fit_anchor_lasso(ds, grid[g], *lambda) : fit_anchor_or_iv(ds, grid[g]);
            coefs[g] = fit.coefficients;
            ok[g] = fit.converged ? 1 : 0;
        });
        for (char c : ok) converged = converged && c;
    } else {
        if (lambda) throw InvalidConfig("--lambda needs --data");
        for (Index k = 0; k < scm->d; ++k) names.push_back("x" + std::to_string(k + 1));
        for (std::size_t g = 0; g < grid.size(); ++g) coefs[g] = population_anchor(*scm, grid[g]);
    }

    std::optional<VectorXd> v;
    if (!o.shift.empty()) {
        if (!scm) throw InvalidConfig("--shift needs --scm");
        const std::vector<double> raw = parse_real_list(o.shift);
        v = Eigen::Map<const VectorXd>(raw.data(), static_cast<Index>(raw.size()));
        if (v->size() != scm->p()) throw DimensionMismatch("--shift must have d + 1 + r entries");
    }
    std::vector<double> tgrid;
    if (!o.tgrid.empty()) {
        if (!v) throw InvalidConfig("--tgrid needs --shift");
        tgrid = parse_real_list(o.tgrid);
    }
    std::optional<VectorXd> causal;
    if (scm && scm->acyclic() && !tgrid.empty()) causal = total_causal_effect(*scm);

    std::vector<double> risk;
    if (v) {
        for (const auto& b : coefs) risk.push_back(shift_risk(*scm, b, Shift::fixed(*v)));
    }
    // curves[t][g] = risk under t * v; the last column is the causal effect when known
    std::vector<std::vector<double>> curves;
    for (double t : tgrid) {
        std::vector<double> row;
        const Shift shift = Shift::fixed(t * *v);
        for (const auto& b : coefs) row.push_back(shift_risk(*scm, b, shift));
        if (causal) row.push_back(shift_risk(*scm, *causal, shift));
        curves.push_back(row);
    }

    if (o.format == "csv") {
        std::vector<std::string> header{"gamma"};
        for (const auto& n : names) header.push_back(n);
        if (v) header.push_back("shift_risk");
        std::vector<std::vector<std::string>> rows;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            std::vector<std::string> row{num(grid[g])};
            for (Index k = 0; k < coefs[g].size(); ++k) row.push_back(num(coefs[g](k)));
            if (v) row.push_back(num(risk[g]));
            rows.push_back(row);
        }
        write_file(dir / "path.csv", csv_table(header, rows));
        if (!tgrid.empty()) {
            std::vector<std::string> ch{"t"};
            for (double g : grid) ch.push_back("gamma_" + num(g));
            if (causal) ch.push_back("causal");
            std::vector<std::vector<std::string>> crows;
            for (std::size_t i = 0; i < tgrid.size(); ++i) {
                std::vector<std::string> row{num(tgrid[i])};
                for (double x : curves[i]) row.push_back(num(x));
                crows.push_back(row);
            }
            write_file(dir / "shift_curves.csv", csv_table(ch, crows));
        }
    } else {
        json doc;
        doc["gamma"] = jvec(grid);
        doc["predictors"] = names;
        doc["coefficients"] = json::array();
        for (const auto& b : coefs) doc["coefficients"].push_back(jvec(b));
        if (v) {
            doc["shift"] = jvec(*v);
            doc["shift_risk"] = jvec(risk);
        }
        if (!tgrid.empty()) {
            doc["t"] = jvec(tgrid);
            doc["curves"] = json::array();
            for (const auto& row : curves) doc["curves"].push_back(jvec(row));
            if (causal) doc["causal_effect"] = jvec(*causal);
        }
        write_file(dir / "path.json", doc.dump(2) + "\n");
    }
    if (!converged) {
        std::cerr << "NoConvergence: at least one l1 fit on the path did not converge\n";
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_cv(const Options& o) {
    require_format(o);
    const AnchorDataset ds = load_data(o);
    const std::vector<double> alphas = parse_real_list(o.alpha);
    if (alphas.empty()) throw InvalidConfig("--alpha is empty");
    const std::vector<double> grid = gamma_list(o, gamma_grid_in(0.0, 100.0, 21));
    const fs::path dir = output_dir(o);
    const GammaCvResult res = cv_gamma(ds, alphas, grid, o.folds, optional_real(o.lambda));

    if (o.format == "csv") {
        std::vector<std::string> header{"gamma"};
        for (double a : alphas) header.push_back("quantile_" + num(a));
        std::vector<std::vector<std::string>> rows;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            std::vector<std::string> row{num(grid[g])};
            for (double s : res.scores[g]) row.push_back(num(s));
            rows.push_back(row);
        }
        write_file(dir / "cv.csv", csv_table(header, rows));
        std::vector<std::vector<std::string>> sel;
        for (std::size_t a = 0; a < alphas.size(); ++a) sel.push_back({num(alphas[a]), num(res.selected_gamma[a])});
        write_file(dir / "cv_selection.csv", csv_table({"alpha", "selected_gamma"}, sel));
    } else {
        json doc;
        doc["gamma"] = jvec(grid);
        doc["alpha"] = jvec(alphas);
        doc["scores"] = json::array();
        for (const auto& row : res.scores) doc["scores"].push_back(jvec(row));
        doc["selected_gamma"] = jvec(res.selected_gamma);
        doc["folds"] = res.fold_levels;
        write_file(dir / "cv.json", doc.dump(2) + "\n");
    }
    return kExitOk;
}

int cmd_simulate(const Options& o) {
    if (o.scm.empty()) throw InvalidConfig("simulate needs --scm");
    if (o.n < 1) throw InvalidConfig("--n must be at least 1");
    const std::uint64_t seed = require_seed(o, "simulate");
    const LinearScm scm = load_scm(o.scm);
    std::optional<Shift> shift;
    if (!o.shift.empty()) {
        const std::vector<double> raw = parse_real_list(o.shift);
        const VectorXd v = Eigen::Map<const VectorXd>(raw.data(), static_cast<Index>(raw.size()));
        if (v.size() != scm.p()) throw DimensionMismatch("--shift must have d + 1 + r entries");
        shift = Shift::fixed(v);
    }
    const fs::path dir = output_dir(o);
    Rng rng(seed);
    const ScmSample s = sample(scm, o.n, rng, shift);
    write_csv((dir / "data.csv").string(), s.data);
    write_file(dir / "config.json", data_config_to_json(config_for(s.data)) + "\n");
    if (!scm.warning().empty()) std::cerr << "warning: " << scm.warning() << "\n";
    return kExitOk;
}

int cmd_verify(const Options& o) {
    const std::uint64_t seed = require_seed(o, "verify");
    if (o.battery.empty() == o.scm.empty()) throw InvalidConfig("verify needs exactly one of --battery and --scm");
    VerifyOptions opt;
    opt.seed = seed;
    const VerifyReport report = o.scm.empty() ? verify_battery(o.battery, opt) : verify_scm(load_scm(o.scm), opt);
    const std::string text = report.to_json() + "\n";
    if (o.out.empty()) {
        std::cout << text;
    } else {
        write_file(output_dir(o) / "verify.json", text);
    }
    for (const auto& c : report.checks) {
        std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.cases << " cases, "
                  << c.failures << " outside [" << num(c.allowed_low) << ", " << num(c.allowed_high) << "])\n";
    }
    if (!report.passed()) throw VerificationFailed{};
    return kExitOk;
}

int cmd_rank(const Options& o) {
    require_format(o);
    const AnchorDataset ds = load_data(o);
    const std::vector<double> range = parse_real_list(o.gamma_range);
    if (range.size() != 2) throw InvalidConfig("--gamma-range takes two values lo,hi");
    const fs::path dir = output_dir(o);
    const RankingTable table =
        replicability_rank(ds, optional_real(o.lambda), range[0], range[1], o.grid_size, o.folds);

    if (o.format == "csv") {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t k = 0; k < table.names.size(); ++k) {
            rows.push_back({table.names[k], num(table.a_scores[k]), num(table.l_scores[k])});
        }
        write_file(dir / "rank.csv", csv_table({"predictor", "a_score", "l_score"}, rows));
    } else {
        json doc;
        doc["predictors"] = table.names;
        doc["a_score"] = jvec(table.a_scores);
        doc["l_score"] = jvec(table.l_scores);
        doc["gamma"] = jvec(table.gamma_grid);
        doc["lambda"] = jnum(table.lambda);
        write_file(dir / "rank.json", doc.dump(2) + "\n");
    }
    return kExitOk;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) out.push_back(parse_real(item));
    return out;
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"anchor regression toolkit"};
    app.require_subcommand(1);
    Options o;

    auto data_opts = [&](CLI::App* sub) {
        sub->add_option("--data", o.data, "CSV dataset");
        sub->add_option("--config", o.config, "column-role JSON");
    };
    auto out_opt = [&](CLI::App* sub) { sub->add_option("--out", o.out, "output directory"); };
    auto format_opt = [&](CLI::App* sub) { sub->add_option("--format", o.format, "csv | json"); };
    auto seed_opt = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "random seed"); };

    CLI::App* fit = app.add_subcommand("fit", "fit anchor regression at one gamma");
    data_opts(fit);
    fit->add_option("--gamma", o.gamma, "gamma >= 0 or inf");
    fit->add_option("--lambda", o.lambda, "l1 penalty");
    out_opt(fit);
    format_opt(fit);
    seed_opt(fit);

    CLI::App* path = app.add_subcommand("path", "coefficients (and shift risks) over a gamma grid");
    data_opts(path);
    path->add_option("--scm", o.scm, "SCM JSON (population path without --data)");
    path->add_option("--grid", o.grid, "comma-separated gammas");
    path->add_option("--lambda", o.lambda, "l1 penalty");
    path->add_option("--shift", o.shift, "shift vector v over (X, Y, H)");
    path->add_option("--tgrid", o.tgrid, "shift strengths t for risk curves under t v");
    out_opt(path);
    format_opt(path);
    seed_opt(path);

    CLI::App* cv = app.add_subcommand("cv", "level-grouped cross-validation of gamma");
    data_opts(cv);
    cv->add_option("--grid", o.grid, "comma-separated gammas");
    cv->add_option("--alpha", o.alpha, "comma-separated quantile levels");
    cv->add_option("--folds", o.folds, "number of folds");
    cv->add_option("--lambda", o.lambda, "l1 penalty");
    out_opt(cv);
    format_opt(cv);
    seed_opt(cv);

    CLI::App* sim = app.add_subcommand("simulate", "sample a dataset from an SCM");
    sim->add_option("--scm", o.scm, "SCM JSON");
    sim->add_option("--n", o.n, "rows");
    sim->add_option("--shift", o.shift, "shift vector v replacing M A");
    out_opt(sim);
    format_opt(sim);
    seed_opt(sim);

    CLI::App* ver = app.add_subcommand("verify", "certify the population identities");
    ver->add_option("--battery", o.battery, "named random-SCM battery (default)");
    ver->add_option("--scm", o.scm, "SCM JSON");
    out_opt(ver);
    format_opt(ver);
    seed_opt(ver);

    CLI::App* rank = app.add_subcommand("rank", "replicability ranking of predictors");
    data_opts(rank);
    rank->add_option("--lambda", o.lambda, "l1 penalty (default: cross-validated at gamma = 0)");
    rank->add_option("--gamma-range", o.gamma_range, "lo,hi");
    rank->add_option("--grid-size", o.grid_size, "gamma grid points");
    rank->add_option("--folds", o.folds, "folds for lambda selection");
    out_opt(rank);
    format_opt(rank);
    seed_opt(rank);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (fit->parsed()) return cmd_fit(o);
        if (path->parsed()) return cmd_path(o);
        if (cv->parsed()) return cmd_cv(o);
        if (sim->parsed()) return cmd_simulate(o);
        if (ver->parsed()) return cmd_verify(o);
        if (rank->parsed()) return cmd_rank(o);
    } catch (const VerificationFailed&) {
        std::cerr << "verification failed\n";
        return kExitVerification;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return e.category() == ErrorCategory::Config ? kExitConfig : kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace anchorlab::cli
