#include "rmm/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <ostream>

#include <CLI11.hpp>

#include "rmm/adapters/cyrus.hpp"
#include "rmm/adapters/monarc.hpp"
#include "rmm/adapters/monarc_client.hpp"
#include "rmm/adapters/pistar.hpp"
#include "rmm/adapters/sync.hpp"
#include "rmm/canonical.hpp"
#include "rmm/risk_engine.hpp"
#include "rmm/validation.hpp"

namespace rmm::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : Error {
    using Error::Error;
};

// Single-writer session on a model file: `<model>.lock` exists while held.
class ModelLock {
public:
    explicit ModelLock(const std::string& model_path) : path_(model_path + ".lock") {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0) {
            throw Error("model is locked by another writer (" + path_ + ")");
        }
        ::close(fd);
    }
    ~ModelLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    ModelLock(const ModelLock&) = delete;
    ModelLock& operator=(const ModelLock&) = delete;

private:
    std::string path_;
};

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

// Replaces the file in one rename so readers never see a partial document.
void replace_file(const std::string& path, std::string_view content) {
    const std::string tmp = path + ".tmp";
    write_file(tmp, content);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("cannot replace " + path + ": " + ec.message());
    }
}

struct Options {
    std::string model_path;
    OutputFormat format = OutputFormat::Human;
    int accept_threshold = engine::kDefaultAcceptThreshold;

    bool init_force = false;
    std::string tool;
    std::string in_path;
    std::string out_path;
    bool detail = false;
    std::string entry;
    std::string target;
    int max_len = 6;
    std::string against;
};

class Session {
public:
    Session(const Options& opt, std::ostream& out, std::ostream& err) : opt_(opt), out_(out), err_(err) {}

    int init() {
        if (fs::exists(opt_.model_path) && !opt_.init_force) {
            throw Error("refusing to overwrite existing " + opt_.model_path + " (use --force)");
        }
        ModelLock lock(opt_.model_path);
        replace_file(opt_.model_path, save_model(RiskModel{}));
        note("initialised " + opt_.model_path);
        return kOk;
    }

    int validate_cmd() {
        const auto findings = validate(load());
        print_findings(findings);
        return has_errors(findings) ? kValidationErrors : kOk;
    }

    int import_cmd() {
        ModelLock lock(opt_.model_path);
        RiskModel model = load();
        const std::string content = read_file(opt_.in_path);
        const std::string_view text(content);
        adapters::ImportResult imported =
            opt_.tool == "pistar" ? adapters::import_pistar(text) : adapters::import_monarc(text);
        model = adapters::merge_import(std::move(model), imported);
        save(model);
        print_findings(imported.findings);
        note("imported " + std::to_string(imported.fragment.element_count()) + " element(s) from " +
             opt_.tool + "; model at revision " + std::to_string(model.revision));
        report_remaining_errors(model);
        return kOk;
    }

    int export_cmd() {
        ModelLock lock(opt_.model_path);
        RiskModel model = load();
        std::vector<TraceLink> links;
        std::vector<Finding> findings;
        if (opt_.tool == "cyrus") {
            auto rel = adapters::export_cyrus(model);
            replace_file(opt_.out_path, rel.text());
            links = std::move(rel.links);
            note("wrote " + std::to_string(rel.statements.size()) + " statement(s) to " + opt_.out_path);
        } else {
            auto ex = opt_.tool == "pistar" ? adapters::export_pistar(model) : adapters::export_monarc(model);
            replace_file(opt_.out_path, ex.document.dump(2) + "\n");
            links = std::move(ex.links);
            findings = std::move(ex.findings);
            note("wrote " + opt_.tool + " document to " + opt_.out_path);
        }
        model = adapters::record_links(std::move(model), links);
        save(model);
        print_findings(findings);
        return kOk;
    }

    int matrix_cmd() {
        const RiskModel model = load();
        const auto matrix = engine::build_risk_matrix(model);
        if (structured()) {
            json j = engine::to_json(matrix);
            if (opt_.detail) {
                j["listing"] = parse_listing(model, matrix);
            }
            emit(j);
        } else {
            out_ << engine::format_matrix_csv(matrix);
            if (opt_.detail) {
                out_ << '\n' << engine::format_matrix_listing(matrix, model);
            }
        }
        return kOk;
    }

    int paths_cmd() {
        const RiskModel model = load();
        std::vector<engine::ZonePath> paths;
        try {
            paths = engine::attack_paths(model, ElementId(opt_.entry), ElementId(opt_.target), opt_.max_len);
        } catch (const UnresolvedRefError& e) {
            throw UsageError(e.what());
        } catch (const InvalidIdError& e) {
            throw UsageError(e.what());
        } catch (const RangeError& e) {
            throw UsageError(e.what());
        }
        if (structured()) {
            json a = json::array();
            for (const auto& p : paths) {
                a.push_back(engine::to_json(p));
            }
            emit(json{{"entry", opt_.entry}, {"target", opt_.target}, {"paths", std::move(a)}});
        } else {
            for (const auto& p : paths) {
                for (std::size_t i = 0; i < p.zones.size(); ++i) {
                    if (i > 0) {
                        out_ << " -[" << p.conduits[i - 1].str() << "]-> ";
                    }
                    out_ << p.zones[i].str();
                }
                out_ << '\n';
            }
            note(std::to_string(paths.size()) + " path(s)");
        }
        return kOk;
    }

    int coverage_cmd() {
        const auto report = engine::coverage_report(load(), opt_.accept_threshold);
        if (structured()) {
            emit(engine::to_json(report));
            return kOk;
        }
        const json j = engine::to_json(report);
        for (const auto& [section, ids] : j.items()) {
            out_ << section << ':';
            for (const auto& id : ids) {
                out_ << ' ' << id.get<std::string>();
            }
            out_ << '\n';
        }
        return kOk;
    }

    int diff_cmd() {
        const RiskModel base = load();
        const RiskModel other = load_model(read_file(opt_.against));
        const auto changes = adapters::diff(base, other);
        if (structured()) {
            emit(adapters::to_json(changes));
        } else {
            out_ << adapters::format_change_set(changes);
        }
        return kOk;
    }

    int push_cmd() {
        ModelLock lock(opt_.model_path);
        RiskModel model = load();
        const std::string url = env_or("RMM_MONARC_URL", "");
        if (url.empty()) {
            throw UsageError("RMM_MONARC_URL is not set");
        }
        std::unique_ptr<adapters::FakeMonarcClient> fake;
        std::unique_ptr<adapters::HttpMonarcClient> http;
        adapters::MonarcClient* client = nullptr;
        if (url.rfind("file://", 0) == 0) {
            fake = std::make_unique<adapters::FakeMonarcClient>(url.substr(7));
            client = fake.get();
        } else {
            adapters::HttpClientConfig cfg;
            cfg.base_url = url;
            cfg.token = env_or("RMM_MONARC_TOKEN", "");
            cfg.project = env_or("RMM_MONARC_PROJECT", "1");
            http = std::make_unique<adapters::HttpMonarcClient>(cfg);
            client = http.get();
        }
        const auto report = adapters::monarc_push(*client, model);
        if (fake) {
            fake->save();
        }
        if (!report.links.empty()) {
            model = adapters::record_links(std::move(model), report.links);
            save(model);
        }
        if (structured()) {
            emit(adapters::to_json(report));
        } else {
            out_ << "created " << report.created << ", updated " << report.updated << ", failed "
                 << report.failed.size() << '\n';
        }
        for (const auto& f : report.failed) {
            err_ << (f.conflict ? "conflict" : "transport") << ": " << to_string(f.endpoint) << ' '
                 << f.element.str() << ": " << f.reason << '\n';
        }
        return report.transport_failed() ? kIoError : kOk;
    }

    int results_cmd() {
        ModelLock lock(opt_.model_path);
        RiskModel model = load();
        const auto rows = adapters::parse_test_results(parse_json(read_file(opt_.in_path)));
        auto imported = adapters::import_cyrus_results(rows, model);
        if (imported.model.revision != model.revision) {
            save(imported.model);
        }
        for (const auto& u : imported.unknown) {
            err_ << "unknown suite: " << u.message << '\n';
        }
        print_findings(imported.findings);
        note("attached " + std::to_string(rows.size() - imported.unknown.size()) + " verdict(s)");
        return kOk;
    }

    int upsert_cmd() {
        ModelLock lock(opt_.model_path);
        RiskModel model = load();
        const json doc = parse_json(read_file(opt_.in_path));
        const json& items = doc.is_object() && doc.contains("upserts") ? doc["upserts"] : doc;
        if (!items.is_array()) {
            throw SchemaError("upsert file: expected an array of {kind, element} or {upserts:[...]}");
        }
        const auto start = model.revision;
        for (const auto& item : items) {
            if (!item.is_object() || !item.contains("kind") || !item.contains("element") ||
                !item["kind"].is_string()) {
                throw SchemaError("upsert file: every entry needs 'kind' and 'element'");
            }
            auto kind = kind_from_name(item["kind"].get<std::string>());
            if (!kind) {
                throw SchemaError("upsert file: unknown kind '" + item["kind"].get<std::string>() + "'");
            }
            model = upsert_element(std::move(model), element_from_json(*kind, item["element"]));
        }
        model.revision = start + (items.empty() ? 0 : 1);
        save(model);
        note("upserted " + std::to_string(items.size()) + " element(s); model at revision " +
             std::to_string(model.revision));
        report_remaining_errors(model);
        return kOk;
    }

private:
    bool structured() const { return opt_.format == OutputFormat::Structured; }

    RiskModel load() const { return load_model(read_file(opt_.model_path)); }
    void save(const RiskModel& model) const { replace_file(opt_.model_path, save_model(model)); }

    void emit(const json& j) { out_ << j.dump(2) << '\n'; }
    void note(const std::string& text) { err_ << text << '\n'; }

    void print_findings(const std::vector<Finding>& findings) {
        if (structured()) {
            emit(json{{"findings", findings_to_json(findings)}});
        } else if (!findings.empty()) {
            out_ << format_findings(findings);
        }
    }

    void report_remaining_errors(const RiskModel& model) {
        const auto findings = validate(model);
        const auto errors = std::count_if(findings.begin(), findings.end(),
                                          [](const Finding& f) { return f.severity == Severity::Error; });
        if (errors > 0) {
            note("model has " + std::to_string(errors) + " error finding(s); run validate for details");
        }
    }

    static json parse_listing(const RiskModel& model, const engine::RiskMatrix& matrix) {
        json rows = json::array();
        for (int i = engine::kScaleSize - 1; i >= 0; --i) {
            for (int f = engine::kScaleSize - 1; f >= 0; --f) {
                for (const auto& id : matrix.cell(i, f)) {
                    const Risk& r = model.risks.at(id);
                    rows.push_back({{"risk", id.str()},
                                    {"impact", i},
                                    {"feasibility", f},
                                    {"inherent", engine::inherent_level(i, f)},
                                    {"residual", engine::residual_level(r, model)},
                                    {"strategy", to_string(r.strategy)}});
                }
            }
        }
        return rows;
    }

    const Options& opt_;
    std::ostream& out_;
    std::ostream& err_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options opt;
    CLI::App app{"Security risk model hub: validate, analyse and exchange risk models", "rmm"};
    app.require_subcommand(1);
    app.set_config("--config", env_or("RMM_CONFIG", "rmm.ini"), "Read default options from an INI/TOML file");

    app.add_option("-m,--model", opt.model_path, "Canonical model file (.riskmodel.json)");
    app.add_option("--format", opt.format, "Output format")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, OutputFormat>{{"human", OutputFormat::Human},
                                                {"structured", OutputFormat::Structured}},
            CLI::ignore_case));
    app.add_option("--accept-threshold", opt.accept_threshold,
                   "Inherent level above which an accepted risk needs a rationale")
        ->check(CLI::Range(0, 16))
        ->envname("RMM_ACCEPT_THRESHOLD");

    auto* init = app.add_subcommand("init", "Write an empty canonical model");
    init->add_flag("--force", opt.init_force, "Overwrite an existing file");

    app.add_subcommand("validate", "Print findings; exit 1 when any Error is present");

    auto* imp = app.add_subcommand("import", "Merge an external document into the model");
    imp->add_option("--from", opt.tool, "Source tool")->required()->check(CLI::IsMember({"pistar", "monarc"}));
    imp->add_option("--in", opt.in_path, "Input document")->required()->check(CLI::ExistingFile);

    auto* exp = app.add_subcommand("export", "Write the model in an external format and record trace links");
    exp->add_option("--to", opt.tool, "Target tool")
        ->required()
        ->check(CLI::IsMember({"pistar", "monarc", "cyrus"}));
    exp->add_option("--out", opt.out_path, "Output file")->required();

    auto* matrix = app.add_subcommand("matrix", "Risk matrix counts (impact rows 4..0, feasibility columns 0..4)");
    matrix->add_flag("--detail", opt.detail, "Also list every risk with inherent and residual levels");

    auto* paths = app.add_subcommand("paths", "Zone paths from an entry zone to the zones supporting a business asset");
    paths->add_option("--entry", opt.entry, "Entry zone id")->required();
    paths->add_option("--target", opt.target, "Target business asset id")->required();
    paths->add_option("--max-len", opt.max_len, "Maximum number of zones per path")->check(CLI::PositiveNumber);

    app.add_subcommand("coverage", "Treatment coverage gaps");

    auto* dif = app.add_subcommand("diff", "Change set from the model to another model file");
    dif->add_option("--against", opt.against, "Other model file")->required()->check(CLI::ExistingFile);

    auto* push = app.add_subcommand("push", "Create or update the model's concepts on a remote tool");
    push->add_option("--to", opt.tool, "Remote tool")->required()->check(CLI::IsMember({"monarc"}));

    auto* res = app.add_subcommand("results", "Attach test verdicts to exported test suites");
    res->add_option("--from", opt.tool, "Result source")->required()->check(CLI::IsMember({"cyrus"}));
    res->add_option("--in", opt.in_path, "Result rows (JSON array)")->required()->check(CLI::ExistingFile);

    auto* ups = app.add_subcommand("upsert", "Insert or replace elements listed in a JSON file");
    ups->add_option("--in", opt.in_path, "Entries [{kind, element}]")->required()->check(CLI::ExistingFile);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (opt.model_path.empty()) {
        if (sub != init) {
            err << "error: --model is required for '" << sub->get_name() << "'\n";
            return kUsage;
        }
        opt.model_path = "model.riskmodel.json";
    }

    Session session(opt, out, err);
    try {
        const std::string name = sub->get_name();
        if (name == "init") return session.init();
        if (name == "validate") return session.validate_cmd();
        if (name == "import") return session.import_cmd();
        if (name == "export") return session.export_cmd();
        if (name == "matrix") return session.matrix_cmd();
        if (name == "paths") return session.paths_cmd();
        if (name == "coverage") return session.coverage_cmd();
        if (name == "diff") return session.diff_cmd();
        if (name == "push") return session.push_cmd();
        if (name == "results") return session.results_cmd();
        if (name == "upsert") return session.upsert_cmd();
        err << "error: unknown subcommand '" << name << "'\n";
        return kUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationGateError& e) {
        err << "error: " << e.what() << '\n' << format_findings(e.findings());
        return kValidationErrors;
    } catch (const KindConflictError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationErrors;
    } catch (const ConflictError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationErrors;
    } catch (const RevisionMismatchError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationErrors;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    }
}

}  // namespace rmm::cli
