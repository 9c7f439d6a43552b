#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "owl/cli.hpp"
#include "owl/committee.hpp"
#include "owl/csv.hpp"
#include "owl/ingest.hpp"
#include "owl/schedule.hpp"
#include "owl/service.hpp"
#include "owl/synth.hpp"

namespace owl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kManifestVersion = 1;

std::vector<std::string> comma_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto& item : split(text, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path);
  file << text;
}

// ---- configuration flags shared by train, openworld and serve ----

struct CommitteeFlags {
  std::size_t members = 3;
  std::string arch = "C";
  std::vector<std::size_t> filters;
  std::size_t kernel = 3;
  std::size_t dense = 250;
  std::size_t epochs = 10;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch = 32;
  double stack_fraction = kDefaultStackFraction;
  double lambda = 1e-4;
  std::vector<CLI::Option*> options;

  void attach(CLI::App* app, bool any_size) {
    auto* m = app->add_option("--members", members, "committee size")->capture_default_str();
    if (!any_size) m->check(CLI::IsMember({2, 3, 5}));
    options = {m,
               app->add_option("--arch", arch, "member structure A, B or C")
                   ->check(CLI::IsMember({"A", "B", "C"}))
                   ->capture_default_str(),
               app->add_option("--filters", filters, "conv filter counts, comma separated (default per structure)")
                   ->delimiter(','),
               app->add_option("--kernel", kernel, "conv kernel side")->capture_default_str(),
               app->add_option("--dense", dense, "hidden dense units")->capture_default_str(),
               app->add_option("--epochs", epochs, "training epochs per member")->capture_default_str(),
               app->add_option("--lr", learning_rate, "SGD learning rate")->capture_default_str(),
               app->add_option("--momentum", momentum, "SGD momentum")->capture_default_str(),
               app->add_option("--batch", batch, "mini-batch size")->capture_default_str(),
               app->add_option("--stack-fraction", stack_fraction, "share withheld for the stacker")
                   ->capture_default_str(),
               app->add_option("--lambda", lambda, "meta-model L2 strength")->capture_default_str()};
  }

  CommitteeConfig build() const {
    CommitteeConfig c;
    c.n_members = members;
    c.architecture = parse_architecture(arch);
    const auto defaults = default_filters(c.architecture);
    if (!filters.empty() && filters.size() != defaults.size())
      throw UsageError("--filters needs " + std::to_string(defaults.size()) + " values for architecture " + arch);
    c.arch.filters = filters;
    c.arch.kernel = kernel;
    c.arch.dense_units = dense;
    c.epochs = epochs;
    c.sgd.learning_rate = learning_rate;
    c.sgd.momentum = momentum;
    c.sgd.batch_size = batch;
    c.stack_fraction = stack_fraction;
    c.meta.lambda = lambda;
    try {
      c.validate();
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

json committee_json(const CommitteeConfig& c) {
  const auto filters = c.arch.filters.empty() ? default_filters(c.architecture) : c.arch.filters;
  return json{{"members", c.n_members},
              {"architecture", to_string(c.architecture)},
              {"filters", filters},
              {"kernel", c.arch.kernel},
              {"dense_units", c.arch.dense_units},
              {"epochs", c.epochs},
              {"learning_rate", c.sgd.learning_rate},
              {"momentum", c.sgd.momentum},
              {"batch_size", c.sgd.batch_size},
              {"stack_fraction", c.stack_fraction},
              {"meta", {{"lambda", c.meta.lambda},
                        {"max_iterations", c.meta.max_iterations},
                        {"tolerance", c.meta.tolerance}}}};
}

template <typename T>
T field(const json& doc, const char* name, const std::string& where) {
  const auto it = doc.find(name);
  if (it == doc.end()) throw ParseError(where, std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + "." + name, "wrong type");
  }
}

CommitteeConfig committee_from_json(const json& doc) {
  const std::string where = "manifest.committee";
  CommitteeConfig c;
  c.n_members = field<std::size_t>(doc, "members", where);
  c.architecture = parse_architecture(field<std::string>(doc, "architecture", where));
  c.arch.filters = field<std::vector<std::size_t>>(doc, "filters", where);
  c.arch.kernel = field<std::size_t>(doc, "kernel", where);
  c.arch.dense_units = field<std::size_t>(doc, "dense_units", where);
  c.epochs = field<std::size_t>(doc, "epochs", where);
  c.sgd.learning_rate = field<double>(doc, "learning_rate", where);
  c.sgd.momentum = field<double>(doc, "momentum", where);
  c.sgd.batch_size = field<std::size_t>(doc, "batch_size", where);
  c.stack_fraction = field<double>(doc, "stack_fraction", where);
  const json meta = field<json>(doc, "meta", where);
  c.meta.lambda = field<double>(meta, "lambda", where + ".meta");
  c.meta.max_iterations = field<std::size_t>(meta, "max_iterations", where + ".meta");
  c.meta.tolerance = field<double>(meta, "tolerance", where + ".meta");
  c.validate();
  return c;
}

json openworld_json(const OpenWorldConfig& c) {
  return json{{"alpha", c.alpha},
              {"calibrate", c.calibrate},
              {"min_new_class_samples", c.min_new_class_samples},
              {"oracle", to_string(c.oracle)},
              {"noise", c.noise},
              {"retrain_epochs", c.retrain_epochs},
              {"known", c.initial_known},
              {"schedule", c.schedule}};
}

OpenWorldConfig openworld_from_json(const json& doc) {
  const std::string where = "manifest.openworld";
  OpenWorldConfig c;
  c.alpha = field<double>(doc, "alpha", where);
  c.calibrate = field<bool>(doc, "calibrate", where);
  c.min_new_class_samples = field<std::size_t>(doc, "min_new_class_samples", where);
  c.oracle = parse_oracle_mode(field<std::string>(doc, "oracle", where));
  c.noise = field<double>(doc, "noise", where);
  c.retrain_epochs = field<std::size_t>(doc, "retrain_epochs", where);
  c.initial_known = field<std::vector<std::string>>(doc, "known", where);
  c.schedule = field<std::vector<std::string>>(doc, "schedule", where);
  c.validate();
  return c;
}

json split_json(const ScheduleSplit& s) {
  return json{{"train_cities", s.train_cities},
              {"validation_cities", s.validation_cities},
              {"stream_cities", s.stream_cities}};
}

ScheduleSplit split_from_json(const json& doc) {
  const std::string where = "manifest.split";
  ScheduleSplit s;
  s.train_cities = field<std::size_t>(doc, "train_cities", where);
  s.validation_cities = field<std::size_t>(doc, "validation_cities", where);
  s.stream_cities = field<std::size_t>(doc, "stream_cities", where);
  return s;
}

json read_manifest(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot read manifest " + path);
  std::stringstream buf;
  buf << file.rdbuf();
  json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ParseError(path, "not a JSON object");
  if (field<int>(doc, "version", path) != kManifestVersion) throw FormatError(path + ": unsupported manifest version");
  return doc;
}

CropStore load_checked_store(const std::string& path, const std::string& expected_fingerprint) {
  CropStore store = load_store(path);
  if (!expected_fingerprint.empty() && store_fingerprint(store) != expected_fingerprint)
    throw FormatError("store " + path + " does not match the manifest fingerprint " + expected_fingerprint);
  return store;
}

void require_classes(const CropStore& store, const std::vector<std::string>& names) {
  if (names.empty()) throw UsageError("no classes given");
  const auto counts = store.class_counts();
  for (const auto& n : names) {
    const auto id = store.labels.find(n);
    if (!id || counts[*id] == 0) throw ConfigError("class '" + n + "' does not occur in the store");
  }
}

// ---- report tables ----

std::vector<Column> accuracy_columns(std::vector<Column> lead, std::size_t members) {
  for (std::size_t i = 1; i <= members; ++i) lead.push_back({"member_" + std::to_string(i), ColumnType::real});
  lead.push_back({"stacked", ColumnType::real});
  return lead;
}

CsvTable epoch_table() {
  return CsvTable({{"run", ColumnType::integer},
                   {"seed", ColumnType::integer},
                   {"step", ColumnType::integer},
                   {"pass", ColumnType::integer},
                   {"epoch", ColumnType::integer},
                   {"loss", ColumnType::real},
                   {"accuracy", ColumnType::real}});
}

void add_epochs(std::vector<CsvTable>& tables, const StackedCommittee& committee, std::size_t run,
                std::uint64_t seed) {
  for (std::size_t m = 0; m < committee.records.size(); ++m) {
    std::size_t pass = 0;
    std::size_t step = 0;
    for (const auto& e : committee.records[m].history) {
      if (e.epoch == 1) ++pass;
      tables[m].add_row({std::to_string(run), std::to_string(seed), std::to_string(++step), std::to_string(pass),
                         std::to_string(e.epoch), format_real(e.loss), format_real(e.accuracy)});
    }
  }
}

void write_epochs(const std::vector<CsvTable>& tables, const std::string& out) {
  for (std::size_t m = 0; m < tables.size(); ++m)
    tables[m].write(path_in(out, "epochs_member_" + std::to_string(m + 1) + ".csv"));
}

// Optional extension: per-class stacked and member accuracy.
void add_per_class(CsvTable& table, const StackedCommittee& committee, const CropStore& test, std::size_t run) {
  for (const auto& name : committee.labels.names()) {
    if (!test.labels.contains(name)) continue;
    const CropStore subset = test.with_labels({name});
    if (subset.empty()) continue;
    const Evaluation e = evaluate(committee, subset);
    std::vector<std::string> row{std::to_string(run), name, std::to_string(e.samples)};
    for (double a : e.member_accuracy) row.push_back(format_real(a));
    row.push_back(format_real(e.stacked_accuracy));
    table.add_row(row);
  }
}

std::vector<std::string> accuracy_cells(const Evaluation& e) {
  std::vector<std::string> cells;
  for (double a : e.member_accuracy) cells.push_back(format_real(a));
  cells.push_back(format_real(e.stacked_accuracy));
  return cells;
}

// ---- commands ----

struct SynthArgs {
  std::string out;
  std::string store;
  std::string classes;
  SynthConfig config;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthConfig config = a.config;
  config.classes = a.classes.empty() ? street_classes() : comma_list(a.classes);
  try {
    config.validate();
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  if (a.out.empty() && a.store.empty()) throw UsageError("synth needs --out, --store or both");
  const auto scenes = synth_scenes(config);
  if (!a.out.empty()) {
    ensure_dir(a.out);
    const std::size_t images = synth_generate(config, a.out);
    out << "wrote " << images << " images to " << a.out << "\n";
  }
  if (!a.store.empty()) {
    IngestOptions options;
    options.classes = config.classes;
    const CropStore store = ingest_scenes(scenes, options);
    save_store(store, a.store);
    out << "wrote " << store.size() << " crops to " << a.store << " (fingerprint " << store_fingerprint(store)
        << ")\n";
  }
  return kExitOk;
}

struct IngestArgs {
  std::string root;
  std::string out;
  std::string classes;
  int min_side = kMinCropSide;
  std::string resize = "bilinear";
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  IngestOptions options;
  options.classes = comma_list(a.classes);
  options.min_side = a.min_side;
  options.resize = a.resize == "nearest" ? ResizeMethod::nearest : ResizeMethod::bilinear;
  options.warn = [&err](const std::string& message) { err << "warning: " << message << "\n"; };
  IngestStats stats;
  const CropStore store = ingest_directory(a.root, options, &stats);
  save_store(store, a.out);
  out << "images " << stats.images << ", polygons " << stats.polygons << ", crops " << store.size()
      << ", too small " << stats.too_small << ", other labels " << stats.filtered_label << ", warnings "
      << stats.warnings << "\n";
  const auto counts = store.class_counts();
  for (std::size_t i = 0; i < store.labels.size(); ++i) out << "  " << store.labels.name(i) << " " << counts[i] << "\n";
  out << "fingerprint " << store_fingerprint(store) << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string store;
  std::string out;
  std::string known = "car,person";
  std::size_t runs = 5;
  std::uint64_t seed = 1;
  std::size_t train_cities = 15;
  std::size_t test_cities = 5;
  bool per_class = false;
  CommitteeFlags committee;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const CommitteeConfig base = a.committee.build();
  const auto known = comma_list(a.known);
  if (a.runs < 1) throw UsageError("--runs must be >= 1");
  const CropStore store = load_store(a.store);
  require_classes(store, known);
  if (a.train_cities == 0 || a.test_cities == 0 || a.train_cities + a.test_cities > store.cities().size())
    throw ConfigError("city split " + std::to_string(a.train_cities) + "+" + std::to_string(a.test_cities) +
                      " does not fit the store's " + std::to_string(store.cities().size()) + " cities");
  ensure_dir(a.out);

  CsvTable closed(accuracy_columns({{"run", ColumnType::integer},
                                    {"seed", ColumnType::integer},
                                    {"architecture", ColumnType::text},
                                    {"test_samples", ColumnType::integer}},
                                   base.n_members));
  CsvTable per_class(accuracy_columns(
      {{"run", ColumnType::integer}, {"class", ColumnType::text}, {"samples", ColumnType::integer}}, base.n_members));
  std::vector<CsvTable> epochs(base.n_members, epoch_table());
  json bundles = json::array();

  const LabelSet labels(known);
  for (std::size_t run = 1; run <= a.runs; ++run) {
    CommitteeConfig config = base;
    config.seed = a.seed + run;
    const auto cities = partition_cities(store.cities(), a.train_cities, a.test_cities, config.seed);
    const CropStore train = store.with_cities(cities.train_cities).with_labels(known);
    const CropStore test = store.with_cities(cities.test_cities).with_labels(known);
    const StackedCommittee committee = train_committee_on(committee_splits(train, config), labels, config);
    const Evaluation e = evaluate(committee, test);

    std::vector<std::string> row{std::to_string(run), std::to_string(config.seed), to_string(config.architecture),
                                 std::to_string(e.samples)};
    for (auto& c : accuracy_cells(e)) row.push_back(c);
    closed.add_row(row);
    add_epochs(epochs, committee, run, config.seed);
    if (a.per_class) add_per_class(per_class, committee, test, run);

    const std::string bundle = "bundles/run_" + std::to_string(run);
    save_bundle(committee, path_in(a.out, bundle));
    bundles.push_back(bundle);
    out << "run " << run << " seed " << config.seed << ":";
    for (std::size_t m = 0; m < e.member_accuracy.size(); ++m) out << " M" << m + 1 << "=" << format_real(e.member_accuracy[m]);
    out << " stacked=" << format_real(e.stacked_accuracy) << "\n";
  }

  closed.write(path_in(a.out, "closed_set.csv"));
  write_epochs(epochs, a.out);
  json artifacts{{"closed_set", "closed_set.csv"}, {"bundles", bundles}};
  if (a.per_class) {
    per_class.write(path_in(a.out, "per_class.csv"));
    artifacts["per_class"] = "per_class.csv";
  }
  for (std::size_t m = 0; m < base.n_members; ++m)
    artifacts["epochs"].push_back("epochs_member_" + std::to_string(m + 1) + ".csv");
  const json manifest{{"version", kManifestVersion},
                      {"command", "train"},
                      {"master_seed", a.seed},
                      {"runs", a.runs},
                      {"known", known},
                      {"cities", {{"train", a.train_cities}, {"test", a.test_cities}}},
                      {"committee", committee_json(base)},
                      {"dataset", {{"path", a.store}, {"fingerprint", store_fingerprint(store)}}},
                      {"artifacts", artifacts}};
  write_text(path_in(a.out, "manifest.json"), manifest.dump(2) + "\n");
  return kExitOk;
}

struct EvalArgs {
  std::string bundle;
  std::string store;
  std::string cities;
  std::string out;
  bool all_classes = false;
  bool per_class = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const StackedCommittee committee = load_bundle(a.bundle);
  CropStore test = load_store(a.store);
  if (!a.cities.empty()) test = test.with_cities(comma_list(a.cities));
  if (!a.all_classes) {
    std::vector<std::string> shared;
    for (const auto& n : committee.labels.names())
      if (test.labels.contains(n)) shared.push_back(n);
    test = test.with_labels(shared);
  }
  if (test.empty()) throw ConfigError("no test samples left after filtering");
  const Evaluation e = evaluate(committee, test);
  CsvTable table(accuracy_columns({{"run", ColumnType::integer}, {"test_samples", ColumnType::integer}},
                                  committee.members.size()));
  std::vector<std::string> row{"0", std::to_string(e.samples)};
  for (auto& c : accuracy_cells(e)) row.push_back(c);
  table.add_row(row);
  CsvTable per_class(accuracy_columns(
      {{"run", ColumnType::integer}, {"class", ColumnType::text}, {"samples", ColumnType::integer}},
      committee.members.size()));
  if (a.per_class) add_per_class(per_class, committee, test, 0);
  out << table.str();
  if (a.per_class) out << per_class.str();
  if (!a.out.empty()) {
    ensure_dir(a.out);
    table.write(path_in(a.out, "closed_set.csv"));
    if (a.per_class) per_class.write(path_in(a.out, "per_class.csv"));
  }
  return kExitOk;
}

struct OpenWorldArgs {
  std::string store;
  std::string out;
  std::string manifest;
  std::string known = "car,person";
  std::string schedule = "traffic_sign,traffic_light,building,vegetation";
  std::string oracle = "simulated";
  std::size_t runs = 5;
  std::uint64_t seed = 1;
  OpenWorldConfig openworld;
  ScheduleSplit split;
  CommitteeFlags committee;
};

struct OpenWorldPlan {
  CommitteeConfig committee;
  OpenWorldConfig openworld;
  ScheduleSplit split;
  std::uint64_t master_seed = 1;
  std::size_t runs = 5;
  std::string store_path;
  std::string fingerprint;
};

OpenWorldPlan plan_from_flags(const OpenWorldArgs& a) {
  OpenWorldPlan p;
  p.committee = a.committee.build();
  p.openworld = a.openworld;
  p.openworld.initial_known = comma_list(a.known);
  p.openworld.schedule = comma_list(a.schedule);
  p.openworld.oracle = parse_oracle_mode(a.oracle);
  try {
    p.openworld.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  p.split = a.split;
  p.master_seed = a.seed;
  p.runs = a.runs;
  p.store_path = a.store;
  return p;
}

OpenWorldPlan plan_from_manifest(const std::string& path, const std::string& store_override) {
  const json doc = read_manifest(path);
  if (field<std::string>(doc, "command", path) != "openworld")
    throw UsageError(path + " is not an openworld manifest");
  OpenWorldPlan p;
  p.committee = committee_from_json(field<json>(doc, "committee", path));
  p.openworld = openworld_from_json(field<json>(doc, "openworld", path));
  p.split = split_from_json(field<json>(doc, "split", path));
  p.master_seed = field<std::uint64_t>(doc, "master_seed", path);
  p.runs = field<std::size_t>(doc, "runs", path);
  const json dataset = field<json>(doc, "dataset", path);
  p.store_path = store_override.empty() ? field<std::string>(dataset, "path", path + ".dataset") : store_override;
  p.fingerprint = field<std::string>(dataset, "fingerprint", path + ".dataset");
  return p;
}

int cmd_openworld(const OpenWorldArgs& a, std::ostream& out) {
  OpenWorldPlan plan = a.manifest.empty() ? plan_from_flags(a) : plan_from_manifest(a.manifest, a.store);
  if (plan.store_path.empty()) throw UsageError("openworld needs --store or --manifest");
  if (plan.runs < 1) throw UsageError("--runs must be >= 1");
  if (plan.openworld.oracle != OracleMode::simulated)
    throw UsageError("openworld runs unattended and needs --oracle simulated; use serve for a human oracle");
  const CropStore store = load_checked_store(plan.store_path, plan.fingerprint);
  plan.fingerprint = store_fingerprint(store);
  ensure_dir(a.out);

  const std::size_t n = plan.committee.n_members;
  CsvTable cycles({{"run", ColumnType::integer},
                   {"seed", ColumnType::integer},
                   {"cycle", ColumnType::integer},
                   {"known_classes", ColumnType::text},
                   {"injected_class", ColumnType::text},
                   {"closed_accuracy", ColumnType::real},
                   {"open_accuracy", ColumnType::real},
                   {"unknowns_flagged", ColumnType::integer},
                   {"false_unknowns", ColumnType::integer},
                   {"oracle_queries", ColumnType::integer},
                   {"post_retrain_accuracy", ColumnType::real},
                   {"alpha", ColumnType::real},
                   {"stream_accuracy", ColumnType::real},
                   {"stream_samples", ColumnType::integer},
                   {"unseen_samples", ColumnType::integer},
                   {"unseen_flagged", ColumnType::integer},
                   {"oracle_errors", ColumnType::integer},
                   {"retrained", ColumnType::boolean},
                   {"injected_accuracy_before", ColumnType::real},
                   {"injected_accuracy_after", ColumnType::real},
                   {"original_accuracy_after", ColumnType::real}});
  CsvTable open_world(accuracy_columns({{"run", ColumnType::integer},
                                        {"seed", ColumnType::integer},
                                        {"cycle", ColumnType::integer},
                                        {"known_count", ColumnType::integer},
                                        {"injected_class", ColumnType::text}},
                                       n));
  std::vector<CsvTable> epochs(n, epoch_table());

  for (std::size_t run = 1; run <= plan.runs; ++run) {
    CommitteeConfig config = plan.committee;
    config.seed = plan.master_seed + run;
    ScheduleSplit split = plan.split;
    split.seed = config.seed;
    const ScheduleReport report = run_schedule(store, config, plan.openworld, split, [&](const CycleRecord& r) {
      out << "run " << run << " cycle " << r.cycle << " +" << (r.injected.empty() ? "-" : r.injected)
          << " closed " << format_real(r.closed_accuracy) << " open " << format_real(r.open_accuracy)
          << " flagged " << r.unknowns_flagged << " false " << r.false_unknowns << " post "
          << format_real(r.post_retrain_accuracy) << "\n";
    });
    for (const auto& r : report.cycles) {
      cycles.add_row({std::to_string(run), std::to_string(config.seed), std::to_string(r.cycle), join(r.known, ';'),
                      r.injected, format_real(r.closed_accuracy), format_real(r.open_accuracy),
                      std::to_string(r.unknowns_flagged), std::to_string(r.false_unknowns),
                      std::to_string(r.oracle_queries), format_real(r.post_retrain_accuracy), format_real(r.alpha),
                      format_real(r.stream_accuracy), std::to_string(r.stream_samples),
                      std::to_string(r.unseen_samples), std::to_string(r.unseen_flagged),
                      std::to_string(r.oracle_errors), format_bool(r.retrained),
                      format_real(r.injected_accuracy_before), format_real(r.injected_accuracy_after),
                      format_real(r.original_accuracy_after)});
      std::vector<std::string> row{std::to_string(run), std::to_string(config.seed), std::to_string(r.cycle),
                                   std::to_string(r.known.size()), r.injected};
      if (r.cycle == 0) continue;  // an empty schedule has no open-world row
      for (double acc : r.member_open_accuracy) row.push_back(format_real(acc));
      row.push_back(format_real(r.open_accuracy));
      open_world.add_row(row);
    }
    add_epochs(epochs, report.committee, run, config.seed);
  }

  cycles.write(path_in(a.out, "cycles.csv"));
  open_world.write(path_in(a.out, "open_world.csv"));
  write_epochs(epochs, a.out);
  json artifacts{{"cycles", "cycles.csv"}, {"open_world", "open_world.csv"}};
  for (std::size_t m = 0; m < n; ++m) artifacts["epochs"].push_back("epochs_member_" + std::to_string(m + 1) + ".csv");
  const json manifest{{"version", kManifestVersion},
                      {"command", "openworld"},
                      {"master_seed", plan.master_seed},
                      {"runs", plan.runs},
                      {"committee", committee_json(plan.committee)},
                      {"openworld", openworld_json(plan.openworld)},
                      {"split", split_json(plan.split)},
                      {"dataset", {{"path", plan.store_path}, {"fingerprint", plan.fingerprint}}},
                      {"artifacts", artifacts}};
  write_text(path_in(a.out, "manifest.json"), manifest.dump(2) + "\n");
  return kExitOk;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct ServeArgs {
  std::string store;
  std::string known = "car,person";
  std::string schedule = "traffic_sign,traffic_light,building,vegetation";
  std::string oracle = "external";
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  double duration = 0.0;
  std::uint64_t seed = 1;
  OpenWorldConfig openworld;
  ScheduleSplit split;
  CommitteeFlags committee;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  CommitteeConfig committee = a.committee.build();
  committee.seed = a.seed;
  OpenWorldConfig config = a.openworld;
  config.initial_known = comma_list(a.known);
  config.schedule = comma_list(a.schedule);
  config.oracle = parse_oracle_mode(a.oracle);
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  ScheduleSplit split = a.split;
  split.seed = a.seed;
  const CropStore store = load_store(a.store);
  out << "training the initial committee on " << join(config.initial_known, ',') << "\n" << std::flush;
  LiveRun run(store, committee, config, split);
  HttpFrontend frontend(run.service(), a.static_dir);
  const int port = frontend.start(a.bind, a.port);
  out << "listening on http://" << a.bind << ":" << port << " (oracle " << to_string(config.oracle) << ")\n"
      << std::flush;
  run.start();

  g_interrupted = false;
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  const auto started = std::chrono::steady_clock::now();
  while (!g_interrupted) {
    if (a.duration > 0 && std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >= a.duration)
      break;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  frontend.stop();
  run.stop();
  const RunStatus status = run.service().status();
  out << "stopped at cycle " << status.cycle << ", " << run.records().size() << " retrain cycles\n";
  if (!status.error.empty()) throw TrainingError("open-world loop failed: " + status.error);
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

struct Stats {
  double sum = 0.0, min = 0.0, max = 0.0;
  std::size_t n = 0;
  void add(double v) {
    min = n ? std::min(min, v) : v;
    max = n ? std::max(max, v) : v;
    sum += v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

double real_cell(const CsvDocument& doc, const std::vector<std::string>& row, std::size_t col) {
  char* end = nullptr;
  const double v = std::strtod(row[col].c_str(), &end);
  if (end != row[col].c_str() + row[col].size()) throw ParseError("csv column " + doc.header[col], "not a number");
  return v;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  CsvTable summary({{"source", ColumnType::text},
                    {"table", ColumnType::text},
                    {"group", ColumnType::text},
                    {"metric", ColumnType::text},
                    {"mean", ColumnType::real},
                    {"min", ColumnType::real},
                    {"max", ColumnType::real},
                    {"count", ColumnType::integer}});
  CsvTable curves({{"source", ColumnType::text},
                   {"member", ColumnType::integer},
                   {"step", ColumnType::integer},
                   {"mean_loss", ColumnType::real},
                   {"mean_accuracy", ColumnType::real},
                   {"runs", ColumnType::integer}});
  auto emit = [&](const std::string& source, const std::string& table, const std::string& group,
                  const std::map<std::string, Stats>& metrics, const std::vector<std::string>& order) {
    for (const auto& name : order) {
      const Stats& s = metrics.at(name);
      summary.add_row({source, table, group, name, format_real(s.mean()), format_real(s.min), format_real(s.max),
                       std::to_string(s.n)});
    }
  };
  std::size_t found = 0;
  for (const auto& dir : a.inputs) {
    const std::string source = fs::path(dir).filename().empty() ? fs::path(dir).parent_path().filename().string()
                                                                  : fs::path(dir).filename().string();
    if (source.find_first_of(",\"\r\n") != std::string::npos) throw UsageError("input directory name has a comma");
    // Member and stacked accuracy columns of a table, summarised per group.
    auto accuracy_summary = [&](const std::string& file, const std::string& table, const std::string& group_col) {
      const std::string path = path_in(dir, file);
      if (!fs::exists(path)) return;
      ++found;
      const CsvDocument doc = read_csv(path);
      std::vector<std::string> order;
      for (const auto& h : doc.header)
        if (h.rfind("member_", 0) == 0 || h == "stacked") order.push_back(h);
      std::map<std::string, std::map<std::string, Stats>> groups;
      std::vector<std::string> group_order;
      const std::size_t gcol = group_col.empty() ? 0 : doc.column(group_col);
      for (const auto& row : doc.rows) {
        const std::string g = group_col.empty() ? "all" : group_col + "=" + row[gcol];
        if (!groups.count(g)) group_order.push_back(g);
        for (const auto& name : order) groups[g][name].add(real_cell(doc, row, doc.column(name)));
      }
      for (const auto& g : group_order) emit(source, table, g, groups[g], order);
      if (table == "closed_set") {
        // Runs where the stack matched or beat its best member (within 0.02).
        Stats beats;
        for (const auto& row : doc.rows) {
          double best = 0.0;
          for (const auto& name : order)
            if (name != "stacked") best = std::max(best, real_cell(doc, row, doc.column(name)));
          beats.add(real_cell(doc, row, doc.column("stacked")) >= best - 0.02 ? 1.0 : 0.0);
        }
        if (beats.n) emit(source, table, "all", {{"stacked_within_0.02_of_best_member", beats}},
                          {"stacked_within_0.02_of_best_member"});
      }
    };
    accuracy_summary("closed_set.csv", "closed_set", "");
    accuracy_summary("open_world.csv", "open_world", "cycle");
    const std::string cycles_path = path_in(dir, "cycles.csv");
    if (fs::exists(cycles_path)) {
      ++found;
      const CsvDocument doc = read_csv(cycles_path);
      const std::vector<std::string> order{"closed_accuracy", "open_accuracy", "post_retrain_accuracy",
                                           "unknowns_flagged", "false_unknowns", "oracle_queries"};
      std::map<std::string, std::map<std::string, Stats>> groups;
      std::vector<std::string> group_order;
      for (const auto& row : doc.rows) {
        const std::string g = "cycle=" + row[doc.column("cycle")];
        if (!groups.count(g)) group_order.push_back(g);
        for (const auto& name : order) groups[g][name].add(real_cell(doc, row, doc.column(name)));
      }
      for (const auto& g : group_order) emit(source, "cycles", g, groups[g], order);
    }
    for (std::size_t m = 1;; ++m) {
      const std::string path = path_in(dir, "epochs_member_" + std::to_string(m) + ".csv");
      if (!fs::exists(path)) break;
      ++found;
      const CsvDocument doc = read_csv(path);
      std::map<long, std::pair<Stats, Stats>> by_step;
      for (const auto& row : doc.rows) {
        const long step = std::stol(row[doc.column("step")]);
        by_step[step].first.add(real_cell(doc, row, doc.column("loss")));
        by_step[step].second.add(real_cell(doc, row, doc.column("accuracy")));
      }
      for (const auto& [step, s] : by_step)
        curves.add_row({source, std::to_string(m), std::to_string(step), format_real(s.first.mean()),
                        format_real(s.second.mean()), std::to_string(s.first.n)});
    }
  }
  if (found == 0) throw IoError("no report CSVs found in the input directories");
  ensure_dir(a.out);
  summary.write(path_in(a.out, "summary.csv"));
  curves.write(path_in(a.out, "curves.csv"));
  out << summary.str();
  return kExitOk;
}

void add_schedule_options(CLI::App* app, OpenWorldConfig& ow, ScheduleSplit& split, std::string& known,
                          std::string& schedule, std::string& oracle, std::uint64_t& seed,
                          std::vector<CLI::Option*>& options) {
  options.push_back(app->add_option("--known", known, "initially known classes")->capture_default_str());
  options.push_back(app->add_option("--schedule", schedule, "unseen classes in injection order")->capture_default_str());
  options.push_back(app->add_option("--alpha", ow.alpha, "certainty threshold")->capture_default_str());
  options.push_back(app->add_flag("--calibrate", ow.calibrate, "pick alpha per cycle on the validation cities"));
  options.push_back(app->add_option("--oracle", oracle, "simulated or external")
                        ->check(CLI::IsMember({"simulated", "external"}))
                        ->capture_default_str());
  options.push_back(app->add_option("--noise", ow.noise, "simulated oracle error rate")->capture_default_str());
  options.push_back(
      app->add_option("--min-new", ow.min_new_class_samples, "labels before a new class is learned")->capture_default_str());
  options.push_back(app->add_option("--retrain-epochs", ow.retrain_epochs, "fine-tuning epochs")->capture_default_str());
  options.push_back(app->add_option("--train-cities", split.train_cities)->capture_default_str());
  options.push_back(app->add_option("--validation-cities", split.validation_cities)->capture_default_str());
  options.push_back(app->add_option("--stream-cities", split.stream_cities)->capture_default_str());
  options.push_back(app->add_option("--seed", seed, "master seed")->capture_default_str());
}

}  // namespace

int exit_code(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return kExitUsage;
  if (dynamic_cast<const TrainingError*>(&error)) return kExitTraining;
  return kExitData;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open-world committee classifier"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expand all help");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic street-scene dataset");
  s->add_option("--out", synth.out, "directory for images and polygon documents");
  s->add_option("--store", synth.store, "also write the cropped samples to this store file");
  s->add_option("--classes", synth.classes, "comma separated classes (default: the six street classes)");
  s->add_option("--per-class", synth.config.per_class)->capture_default_str();
  s->add_option("--cities", synth.config.cities)->capture_default_str();
  s->add_option("--images-per-city", synth.config.images_per_city)->capture_default_str();
  s->add_option("--seed", synth.config.seed)->capture_default_str();

  IngestArgs ingest;
  auto* i = app.add_subcommand("ingest", "crop annotated images into a store file");
  i->add_option("--root", ingest.root, "dataset root: <root>/<city>/<image> with _polygons.json")->required();
  i->add_option("--out", ingest.out, "store file to write")->required();
  i->add_option("--classes", ingest.classes, "keep only these labels, in this id order");
  i->add_option("--min-side", ingest.min_side)->capture_default_str();
  i->add_option("--resize", ingest.resize)->check(CLI::IsMember({"bilinear", "nearest"}))->capture_default_str();
  std::uint64_t unused_seed = 0;
  i->add_option("--seed", unused_seed, "accepted for uniformity; ingestion is deterministic");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train and stack committees over repeated runs");
  t->add_option("--store", train.store, "store file")->required();
  t->add_option("--out", train.out, "report directory")->required();
  t->add_option("--known", train.known)->capture_default_str();
  t->add_option("--runs", train.runs)->capture_default_str();
  t->add_option("--seed", train.seed, "master seed; run r uses seed + r")->capture_default_str();
  t->add_option("--train-cities", train.train_cities)->capture_default_str();
  t->add_option("--test-cities", train.test_cities)->capture_default_str();
  t->add_flag("--per-class", train.per_class, "extension: also write per_class.csv");
  train.committee.attach(t, false);

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate a committee bundle on a store");
  e->add_option("--bundle", eval.bundle)->required();
  e->add_option("--store", eval.store)->required();
  e->add_option("--cities", eval.cities, "restrict to these cities");
  e->add_option("--out", eval.out, "also write closed_set.csv here");
  e->add_flag("--all-classes", eval.all_classes, "count samples of classes the committee lacks as misses");
  e->add_flag("--per-class", eval.per_class, "extension: per-class breakdown");
  std::uint64_t eval_seed = 0;
  e->add_option("--seed", eval_seed, "accepted for uniformity; evaluation is deterministic");

  OpenWorldArgs ow;
  auto* o = app.add_subcommand("openworld", "run the unknown-injection schedule with a simulated oracle");
  o->add_option("--store", ow.store, "store file (overrides the manifest's path)");
  o->add_option("--out", ow.out, "report directory")->required();
  auto* manifest = o->add_option("--manifest", ow.manifest, "replay the configuration of an earlier run");
  std::vector<CLI::Option*> ow_options;
  ow_options.push_back(o->add_option("--runs", ow.runs)->capture_default_str());
  add_schedule_options(o, ow.openworld, ow.split, ow.known, ow.schedule, ow.oracle, ow.seed, ow_options);
  ow.committee.attach(o, false);
  for (auto* opt : ow.committee.options) ow_options.push_back(opt);
  for (auto* opt : ow_options) manifest->excludes(opt);

  ServeArgs serve;
  auto* v = app.add_subcommand("serve", "host the oracle API alongside a live open-world run");
  v->add_option("--store", serve.store, "store file")->required();
  v->add_option("--port", serve.port)->capture_default_str();
  v->add_option("--bind", serve.bind)->capture_default_str();
  v->add_option("--static", serve.static_dir, "directory of console assets served at /");
  v->add_option("--duration", serve.duration, "stop after this many seconds (0: until interrupted)")
      ->capture_default_str();
  std::vector<CLI::Option*> serve_options;
  add_schedule_options(v, serve.openworld, serve.split, serve.known, serve.schedule, serve.oracle, serve.seed,
                       serve_options);
  v->get_option("--oracle")->default_str("external");
  serve.committee.attach(v, false);

  ReportArgs report;
  auto* r = app.add_subcommand("report", "aggregate report CSVs and emit training curves");
  r->add_option("--in", report.inputs, "report directories")->required();
  r->add_option("--out", report.out, "summary directory")->required();

  std::vector<const char*> argv{"owl"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*s) return cmd_synth(synth, out);
    if (*i) return cmd_ingest(ingest, out, err);
    if (*t) return cmd_train(train, out);
    if (*e) return cmd_eval(eval, out);
    if (*o) return cmd_openworld(ow, out);
    if (*v) return cmd_serve(serve, out);
    if (*r) return cmd_report(report, out);
  } catch (const std::exception& error) {
    err << "error: " << error.what() << "\n";
    return exit_code(error);
  }
  return kExitUsage;
}

}  // namespace owl::cli
