#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "switchnet/config.hpp"
#include "switchnet/errors.hpp"
#include "switchnet/examples.hpp"
#include "switchnet/harness.hpp"

using namespace switchnet;

namespace {

struct Options {
    std::string config;
    std::vector<std::uint64_t> seeds;
    double horizon = 0.0;
    std::string out;
    std::vector<std::string> overrides;
};

int print_examples() {
    std::cout << "name,perfect,description\n";
    for (const auto& e : list_examples()) {
        const char* perfect = !e.perfect ? "-" : (*e.perfect ? "perfect" : "non-perfect");
        std::cout << e.name << ',' << perfect << ",\"" << e.description << "\"\n";
    }
    return 0;
}

int run_kind(const std::string& kind, const Options& opt) {
    auto doc = load_config_document(opt.config);
    doc["kind"] = kind;
    for (const auto& o : opt.overrides) apply_override(doc, o);
    if (!opt.seeds.empty()) doc["seeds"] = opt.seeds;
    if (opt.horizon > 0.0) doc["simulator"]["horizon"] = opt.horizon;
    if (!opt.out.empty()) doc["out"] = opt.out;

    const auto cfg = parse_config(doc);
    const auto bundle = run(cfg);
    write_bundle(bundle, cfg.out_dir);
    std::cout << bundle.csv();
    std::cerr << "wrote " << cfg.out_dir << "/metrics.csv and " << cfg.out_dir << "/summary.json (config "
              << bundle.summary["provenance"]["config_hash"].get<std::string>() << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Store-Forward, proportional-fair and backpressure network analysis"};
    app.require_subcommand(1);
    Options opt;
    std::string chosen;
    for (const char* kind : {"analyze", "simulate", "compare", "independence", "ldp", "balance"}) {
        auto* sub = app.add_subcommand(kind);
        sub->add_option("--config", opt.config, "config file or builtin:<example>")->required();
        sub->add_option("--seed", opt.seeds, "seed (repeat for replications)");
        sub->add_option("--horizon", opt.horizon, "simulation horizon");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--override", opt.overrides, "key.path=value");
        sub->callback([&chosen, kind] { chosen = kind; });
    }
    app.add_subcommand("examples", "list bundled networks")->callback([&chosen] { chosen = "examples"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (chosen == "examples") return print_examples();
        return run_kind(chosen, opt);
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const CapExceeded& e) {
        std::cerr << "size cap exceeded: " << e.what() << '\n';
        return 2;
    } catch (const InadmissibleLoad& e) {
        std::cerr << "inadmissible load: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
