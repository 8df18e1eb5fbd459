#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "anchorkb/build.hpp"
#include "anchorkb/embedding.hpp"
#include "anchorkb/errors.hpp"
#include "anchorkb/gain_model.hpp"
#include "anchorkb/injection.hpp"
#include "anchorkb/kb.hpp"
#include "anchorkb/retrieval.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMissingInput = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitInternal = 70;

struct BuildArgs {
    std::string input;
    std::string out;
    std::string mode = "default";
    std::string provider = "mock";
    std::string fixtures = "fixtures/mock";
    std::string provider_config;
    anchorkb::BuildConfig config;
};

struct QueryArgs {
    std::string kb;
    std::string query;
    std::size_t k = 5;
    double sigma = 0.25;
    std::size_t budget = 9;
    std::string emit = "selection";
    std::string memories;
};

struct AnalyzeArgs {
    std::string csv;
    std::string report = "gain_report.json";
};

std::unique_ptr<anchorkb::Provider> make_provider(const BuildArgs& args) {
    if (args.provider == "mock") {
        return std::make_unique<anchorkb::MockProvider>(args.fixtures);
    }
    if (args.provider_config.empty()) {
        throw std::invalid_argument("remote provider needs --provider-config");
    }
    return std::make_unique<anchorkb::RemoteProvider>(
        anchorkb::load_provider_config(args.provider_config));
}

int cmd_build(const BuildArgs& args) {
    auto started = std::chrono::steady_clock::now();
    anchorkb::Conversation conv = anchorkb::load_conversation(args.input);
    auto provider = make_provider(args);
    anchorkb::BuildMode mode = anchorkb::build_mode_from_name(args.mode);
    anchorkb::AnchorKB kb = anchorkb::build_kb(conv, *provider, args.config, mode);
    anchorkb::save_kb(kb, args.out);
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);

    std::printf("built %s -> %s (mode %s)\n", conv.conversation_id.c_str(), args.out.c_str(),
                args.mode.c_str());
    std::printf("anchors: %zu entities, %zu events, %zu traces, %zu topics\n",
                kb.entities.size(), kb.events.events().size(), kb.events.traces().size(),
                kb.topics.clusters().size());
    std::printf("Build Tokens (K): %.2f\n",
                static_cast<double>(kb.usage.approx_tokens) / 1000.0);
    std::printf("Build Time (s): %.2f\n", elapsed.count());
    return kExitOk;
}

nlohmann::json selection_to_json(const anchorkb::AnchorSelection& selection) {
    nlohmann::json doc;
    doc["entities"] = nlohmann::json::array();
    for (const auto& scored : selection.entities) {
        doc["entities"].push_back({{"similarity", scored.similarity},
                                   {"profile", anchorkb::profile_to_json(scored.profile)}});
    }
    doc["events"] = nlohmann::json::array();
    for (const auto& scored : selection.events) {
        doc["events"].push_back({{"similarity", scored.similarity},
                                 {"temporal_reserved", scored.temporal_reserved},
                                 {"event", anchorkb::event_to_json(scored.event)}});
    }
    doc["topics"] = nlohmann::json::array();
    for (const auto& scored : selection.topics) {
        doc["topics"].push_back({{"similarity", scored.similarity},
                                 {"cluster", anchorkb::cluster_to_json(scored.cluster)}});
    }
    return doc;
}

int cmd_query(const QueryArgs& args) {
    anchorkb::AnchorKB kb = anchorkb::load_kb(args.kb);
    anchorkb::RetrievalConfig cfg;
    cfg.k_entity = args.k;
    cfg.k_event = args.k;
    cfg.k_topic = args.k;
    cfg.sigma = args.sigma;
    anchorkb::HashedBagEmbedder embedder;
    anchorkb::AnchorSelection selection =
        anchorkb::select_anchors(kb, args.query, cfg, embedder);

    if (args.emit == "selection") {
        std::cout << selection_to_json(selection).dump(2) << "\n";
        return kExitOk;
    }
    if (args.emit == "queries") {
        anchorkb::ModuleQueries queries = anchorkb::generate_module_queries(selection);
        anchorkb::ExpandedQuerySet merged = anchorkb::round_robin_merge(queries, args.budget);
        for (std::size_t i = 0; i < merged.queries.size(); ++i) {
            std::cout << "[" << merged.provenance[i] << "] " << merged.queries[i] << "\n";
        }
        return kExitOk;
    }
    if (args.emit == "prompt") {
        anchorkb::SpeakerMemories memories;
        if (!args.memories.empty()) memories = anchorkb::load_memories(args.memories);
        anchorkb::InjectionContext ctx = anchorkb::format_injection(selection);
        std::cout << anchorkb::assemble_prompt(args.query, memories, ctx);
        return kExitOk;
    }
    throw std::invalid_argument("unknown --emit value: " + args.emit);
}

void print_fit(const char* label, const anchorkb::LinearFit& fit) {
    std::printf("%s: slope=%.4f intercept=%.4f r_squared=%.4f p=%.4g n=%zu\n", label, fit.slope,
                fit.intercept, fit.r_squared, fit.p_value_slope, fit.n);
}

int cmd_analyze(const AnalyzeArgs& args) {
    auto points = anchorkb::load_gain_csv(args.csv);
    anchorkb::GainAnalysis analysis = anchorkb::analyze_gains(points);

    print_fit("pooled", analysis.pooled);
    for (const auto& [metric, fit] : analysis.per_metric) print_fit(metric.c_str(), fit);
    std::printf("slope homogeneity: F(%zu,%zu)=%.4f p=%.4f\n", analysis.f_test.df1,
                analysis.f_test.df2, analysis.f_test.f_stat, analysis.f_test.p_value);

    if (!args.report.empty()) {
        std::ofstream out(args.report);
        if (!out) throw anchorkb::IoError("cannot write report: " + args.report);
        out << anchorkb::analysis_to_json(analysis).dump(2) << "\n";
        std::printf("report written to %s\n", args.report.c_str());
    }
    return kExitOk;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Structured-memory anchor toolkit"};
    app.require_subcommand(1);

    BuildArgs build_args;
    CLI::App* build = app.add_subcommand("build", "Build an anchor knowledge base");
    build->add_option("--input", build_args.input, "Conversation JSON path")->required();
    build->add_option("--out", build_args.out, "Output knowledge-base directory")->required();
    build->add_option("--batch-entity", build_args.config.batch_entity, "Entity batch size");
    build->add_option("--batch-event", build_args.config.batch_event, "Event batch size");
    build->add_option("--batch-topic", build_args.config.batch_topic, "Topic batch size");
    build->add_option("--overlap", build_args.config.topic_overlap, "Topic batch overlap");
    build->add_option("--tau", build_args.config.dedup_tau, "Event dedup threshold");
    build->add_option("--cooccur-threshold", build_args.config.cooccurrence_threshold,
                      "Co-occurrence relation threshold");
    build->add_option("--mode", build_args.mode, "default|parallel|triple");
    build->add_option("--provider", build_args.provider, "mock|remote");
    build->add_option("--fixtures", build_args.fixtures, "Mock fixture directory");
    build->add_option("--provider-config", build_args.provider_config,
                      "Remote provider config JSON");

    QueryArgs query_args;
    CLI::App* query = app.add_subcommand("query", "Query a knowledge base");
    query->add_option("--kb", query_args.kb, "Knowledge-base directory")->required();
    query->add_option("--query", query_args.query, "Query text")->required();
    query->add_option("--k", query_args.k, "Anchors kept per module");
    query->add_option("--sigma", query_args.sigma, "Similarity threshold");
    query->add_option("--budget", query_args.budget, "Expanded-query budget");
    query->add_option("--emit", query_args.emit, "selection|queries|prompt");
    query->add_option("--memories", query_args.memories, "Host memories JSON");

    AnalyzeArgs analyze_args;
    CLI::App* analyze = app.add_subcommand("analyze", "Fit the gain model to a dataset");
    analyze->add_option("csv", analyze_args.csv, "Gain dataset CSV")->required();
    analyze->add_option("--report", analyze_args.report, "JSON report path (empty to skip)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (build->parsed()) return cmd_build(build_args);
    if (query->parsed()) return cmd_query(query_args);
    return cmd_analyze(analyze_args);
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const anchorkb::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitMissingInput;
    } catch (const anchorkb::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitData;
    } catch (const anchorkb::EmptyInputError& e) {
        std::cerr << "empty input: " << e.what() << "\n";
        return kExitData;
    } catch (const anchorkb::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitData;
    } catch (const anchorkb::VersionError& e) {
        std::cerr << "version error: " << e.what() << "\n";
        return kExitData;
    } catch (const anchorkb::DegenerateDesignError& e) {
        std::cerr << "degenerate design: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternal;
    }
}
