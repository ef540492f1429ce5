// Command line front end: environment generation, cluster and survival
// queries, spectral and island summaries, conditioned sampling, and the
// batch experiments. Exit codes: 0 success, 1 usage or I/O failure, 2 a
// hard-asserted bound failed.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trapwalk/experiments.hpp"
#include "trapwalk/io.hpp"
#include "trapwalk/trapwalk.hpp"

namespace {

using trapwalk::Site;
using ordered_json = nlohmann::ordered_json;

Site parse_site(const std::vector<std::int32_t>& coords, int d) {
    if (std::int64_t(coords.size()) != d)
        throw trapwalk::DomainError("expected " + std::to_string(d) + " coordinates");
    Site s{};
    for (int a = 0; a < d; ++a) s.c[static_cast<std::size_t>(a)] = coords[static_cast<std::size_t>(a)];
    return s;
}

std::string site_str(Site s, int d) {
    std::string out = "(";
    for (int a = 0; a < d; ++a) {
        if (a) out += ",";
        out += std::to_string(s.c[static_cast<std::size_t>(a)]);
    }
    return out + ")";
}

int run_experiment(const std::string& kind, const std::string& config_file,
                   const std::string& out_override) {
    trapwalk::ExperimentConfig cfg = trapwalk::load_experiment_config(config_file);
    if (!out_override.empty()) cfg.output_dir = out_override;

    trapwalk::Report rep;
    if (kind == "tail")
        rep = trapwalk::run_tail_experiment(cfg);
    else if (kind == "localize")
        rep = trapwalk::run_localization_experiment(cfg);
    else if (kind == "asymptotics")
        rep = trapwalk::run_survival_asymptotics(cfg);
    else if (kind == "inequalities")
        rep = trapwalk::run_inequality_suite(cfg);
    else
        throw trapwalk::DomainError("unknown experiment: " + kind);

    const std::filesystem::path dir = cfg.output_dir;
    const auto files = trapwalk::write_report_csv(rep, dir);
    trapwalk::write_report_json(rep, dir / (rep.experiment + "_report.json"));
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    std::cout << "wrote " << (dir / (rep.experiment + "_report.json")).string() << "\n";
    for (const auto& note : rep.notes) std::cout << "note: " << note << "\n";
    for (const auto& [name, ok] : rep.hard_assertions)
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    return rep.all_hard_passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trapwalk: random walks among Bernoulli obstacles"};
    app.set_version_flag("--version", std::string("trapwalk ") + trapwalk::kTrapwalkVersion);
    app.require_subcommand(1);
    int exit_code = 0;

    // gen
    auto* gen = app.add_subcommand("gen", "generate an obstacle environment and save it");
    int gen_d = 2;
    std::int32_t gen_hw = 10;
    double gen_p = 0.5;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("-d,--dim", gen_d, "dimension (1..3)")->capture_default_str();
    gen->add_option("-w,--half-width", gen_hw, "box half width")->capture_default_str();
    gen->add_option("-p,--open-prob", gen_p, "per-site open probability")->capture_default_str();
    gen->add_option("-s,--seed", gen_seed, "environment seed")->capture_default_str();
    gen->add_option("-o,--out", gen_out, "output file")->required();
    gen->callback([&] {
        trapwalk::BoxSpec box;
        box.d = gen_d;
        box.half_width = gen_hw;
        const auto env = trapwalk::Environment::generate(box, gen_p, gen_seed);
        trapwalk::save_environment(env, gen_out);
        std::cout << "d=" << gen_d << " half_width=" << gen_hw << " p=" << gen_p
                  << " seed=" << gen_seed << " open=" << env.open_count() << "/"
                  << box.volume() << "\n";
    });

    // clusters
    auto* clu = app.add_subcommand("clusters", "open-cluster summary of an environment");
    std::string clu_env;
    clu->add_option("env", clu_env, "environment file")->required();
    clu->callback([&] {
        const auto env = trapwalk::load_environment(clu_env);
        const auto lab = trapwalk::label_clusters(env);
        std::cout << "clusters=" << lab.cluster_count() << "\n";
        if (lab.spanning_id)
            std::cout << "spanning_id=" << *lab.spanning_id
                      << " size=" << lab.sizes[static_cast<std::size_t>(*lab.spanning_id)] << "\n";
        else
            std::cout << "spanning_id=none\n";
        std::int64_t largest = 0;
        for (auto s : lab.sizes) largest = std::max(largest, s);
        std::cout << "largest=" << largest << "\n";
    });

    // survival
    auto* sur = app.add_subcommand("survival", "survival probability from a start site");
    std::string sur_env;
    std::vector<std::int32_t> sur_start;
    std::int64_t sur_horizon = 0;
    std::string sur_field_out;
    sur->add_option("env", sur_env, "environment file")->required();
    sur->add_option("-t,--horizon", sur_horizon, "number of steps")->required();
    sur->add_option("--start", sur_start, "start site (d coordinates, default origin)");
    sur->add_option("--field-out", sur_field_out, "also save the final level (prefix)");
    sur->callback([&] {
        const auto env = trapwalk::load_environment(sur_env);
        const Site start =
            sur_start.empty() ? Site{} : parse_site(sur_start, env.box().d);
        trapwalk::SurvivalQuery q;
        q.horizon = sur_horizon;
        const double prob = trapwalk::survival_probability(env, start, q);
        std::cout << "P" << site_str(start, env.box().d) << "(tau > " << sur_horizon
                  << ") = " << trapwalk::format_g17(prob) << "\n";
        if (!sur_field_out.empty()) {
            const auto field = trapwalk::survival_final(env, q);
            trapwalk::save_field_level(field, sur_field_out);
            std::cout << "wrote " << sur_field_out << "\n";
        }
    });

    // spectra
    auto* spe = app.add_subcommand("spectra", "principal eigenvalue around a site");
    std::string spe_env;
    std::vector<std::int32_t> spe_center;
    double spe_R = 5;
    double spe_tol = 1e-10;
    spe->add_option("env", spe_env, "environment file")->required();
    spe->add_option("--center", spe_center, "center site (default origin)");
    spe->add_option("-R,--radius", spe_R, "component radius")->capture_default_str();
    spe->add_option("--tol", spe_tol, "residual tolerance")->capture_default_str();
    spe->callback([&] {
        const auto env = trapwalk::load_environment(spe_env);
        const Site v = spe_center.empty() ? Site{} : parse_site(spe_center, env.box().d);
        const auto comp = trapwalk::restricted_component(env, v, spe_R);
        if (comp.sites.empty()) {
            std::cout << "site is closed; component empty; lambda = 0\n";
            return;
        }
        trapwalk::SpectralOptions opt;
        opt.tol = spe_tol;
        const auto res = trapwalk::principal_eigen(env, comp, opt);
        std::cout << "component_size=" << comp.sites.size() << "\n"
                  << "lambda=" << trapwalk::format_g17(res.lambda) << "\n"
                  << "residual=" << trapwalk::format_g17(res.residual) << "\n"
                  << "iterations=" << res.iterations << "\n";
    });

    // islands
    auto* isl = app.add_subcommand("islands", "island hierarchy summary");
    std::string isl_env, isl_save;
    std::int64_t isl_n = 0, isl_kn = 0;
    double isl_R = 0;
    isl->add_option("env", isl_env, "environment file")->required();
    isl->add_option("-n,--scale", isl_n, "scale parameter n")->required();
    isl->add_option("--k-n", isl_kn, "survival horizon override");
    isl->add_option("-R,--radius", isl_R, "localization radius override");
    isl->add_option("--save", isl_save, "save the hierarchy as JSON");
    isl->callback([&] {
        const auto env = trapwalk::load_environment(isl_env);
        trapwalk::ScaleParams params = trapwalk::ScaleParams::for_scale(env.box().d, isl_n);
        if (isl_kn > 0) params.k_n = isl_kn;
        if (isl_R > 0) params.R = isl_R;
        params.validate();
        const auto hb = trapwalk::build_hierarchy(env, params);
        const auto& hier = hb.hier;
        std::cout << "k_n=" << params.k_n << " R=" << params.R << "\n"
                  << "p0=" << trapwalk::format_g17(hier.quantiles.p0)
                  << " order_index=" << hier.quantiles.order_index
                  << (hier.quantiles.low_resolution ? " (low resolution)" : "") << "\n";
        for (const auto& [alpha, u] : hier.U)
            std::cout << "|U_" << alpha << "|=" << u.size() << "\n";
        std::cout << "dstar_threshold=" << trapwalk::format_g17(hier.dstar_threshold)
                  << " |D*|=" << hier.dstar.size() << "\n"
                  << "islands=" << hier.selection.V.size()
                  << " |D_n|=" << hier.selection.dn.size() << "\n";
        for (std::size_t i = 0; i < hier.selection.V.size() && i < 8; ++i)
            std::cout << "  V[" << i << "]=" << site_str(hier.selection.V[i], env.box().d)
                      << " lambda=" << trapwalk::format_g17(hier.lambda.at(hier.selection.V[i]))
                      << "\n";
        if (!isl_save.empty()) {
            trapwalk::save_hierarchy(hier, isl_save);
            std::cout << "wrote " << isl_save << "\n";
        }
    });

    // sample
    auto* sam = app.add_subcommand("sample", "sample conditioned surviving paths");
    std::string sam_env, sam_out;
    std::vector<std::int32_t> sam_start;
    std::int64_t sam_horizon = 0, sam_count = 1;
    std::uint64_t sam_seed = 1;
    sam->add_option("env", sam_env, "environment file")->required();
    sam->add_option("-t,--horizon", sam_horizon, "number of steps")->required();
    sam->add_option("--start", sam_start, "start site (default origin)");
    sam->add_option("-c,--count", sam_count, "number of paths")->capture_default_str();
    sam->add_option("-s,--seed", sam_seed, "sampling seed")->capture_default_str();
    sam->add_option("-o,--out", sam_out, "write paths as JSON");
    sam->callback([&] {
        const auto env = trapwalk::load_environment(sam_env);
        const Site start = sam_start.empty() ? Site{} : parse_site(sam_start, env.box().d);
        trapwalk::SurvivalQuery q;
        q.horizon = sam_horizon;
        const auto field = trapwalk::survival_field(env, q);
        const auto paths =
            trapwalk::sample_conditioned_batch(env, start, field, sam_seed, sam_count);
        std::int64_t total_loops = 0;
        ordered_json jpaths = ordered_json::array();
        for (const auto& path : paths) {
            const auto dec = trapwalk::loop_erase(path);
            std::int64_t loops = 0;
            for (const auto& l : dec.loops)
                if (!l.empty()) ++loops;
            total_loops += loops;
            if (!sam_out.empty()) {
                ordered_json jp;
                ordered_json coords = ordered_json::array();
                for (const Site& s : path) {
                    ordered_json c = ordered_json::array();
                    for (int a = 0; a < env.box().d; ++a) c.push_back(s.c[static_cast<std::size_t>(a)]);
                    coords.push_back(c);
                }
                jp["path"] = coords;
                jp["erased_length"] = dec.eta.size() - 1;
                jp["loops"] = loops;
                jpaths.push_back(jp);
            }
        }
        std::cout << "paths=" << paths.size() << " mean_loops="
                  << trapwalk::format_g17(double(total_loops) / double(paths.size())) << "\n";
        if (!sam_out.empty()) {
            std::ofstream out(sam_out, std::ios::binary | std::ios::trunc);
            if (!out) throw trapwalk::Error("cannot open for writing: " + sam_out);
            out << jpaths.dump(2) << "\n";
            std::cout << "wrote " << sam_out << "\n";
        }
    });

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a batch experiment from a config");
    std::string exp_kind, exp_config, exp_outdir;
    exp->add_option("kind", exp_kind, "tail | localize | asymptotics | inequalities")
        ->required()
        ->check(CLI::IsMember({"tail", "localize", "asymptotics", "inequalities"}));
    exp->add_option("-c,--config", exp_config, "JSON config file")->required();
    exp->add_option("--output-dir", exp_outdir, "override the config output directory");
    exp->callback([&] { exit_code = run_experiment(exp_kind, exp_config, exp_outdir); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const trapwalk::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
