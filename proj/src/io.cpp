#include "stiffnet/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stiffnet/hash.hpp"

namespace stiffnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const std::string& path, const std::string& content) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::vector<std::string> splitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  return fields;
}

double toDouble(const std::string& s) {
  return std::stod(s);
}

json scalerToJson(const ScalerParams& p) {
  return json{{"mode", p.mode == ScaleMode::Log ? "log" : "linear"},
              {"mu", p.mu},
              {"sigma", p.sigma},
              {"z_min", p.z_min},
              {"z_max", p.z_max},
              {"degenerate", p.degenerate}};
}

ScalerParams scalerFromJson(const json& j) {
  ScalerParams p;
  p.mode = j.at("mode").get<std::string>() == "log" ? ScaleMode::Log : ScaleMode::Linear;
  p.mu = j.at("mu").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.z_min = j.at("z_min").get<double>();
  p.z_max = j.at("z_max").get<double>();
  p.degenerate = j.at("degenerate").get<bool>();
  return p;
}

json matrixToJson(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrixFromJson(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

json vectorToJson(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vectorFromJson(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

std::string approachName(Approach a) {
  return a == Approach::Derivative ? "derivative" : "solution";
}

Approach approachFromName(const std::string& name) {
  if (name == "derivative") return Approach::Derivative;
  if (name == "solution") return Approach::Solution;
  throw std::runtime_error("unknown approach: " + name);
}

}  // namespace

std::string formatDouble(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::uint64_t hashFile(const std::string& path) {
  return fnv1a64(readFile(path));
}

std::string metaPathFor(const std::string& csv_path) {
  fs::path p(csv_path);
  p.replace_extension(".meta.json");
  return p.string();
}

void saveTrajectory(const std::string& csv_path, const Trajectory& traj,
                    const std::vector<std::string>& species_names,
                    const IntegratorConfig& config) {
  if (traj.states.empty()) throw std::invalid_argument("saveTrajectory: empty trajectory");
  const Index m = traj.states.front().densities.size();
  if (static_cast<Index>(species_names.size()) != m)
    throw std::invalid_argument("saveTrajectory: species name count mismatch");

  std::ostringstream out;
  out << "time,temperature";
  for (const auto& name : species_names) out << ",rho_" << name;
  out << "\n";
  for (const auto& s : traj.states) {
    out << formatDouble(s.time) << "," << formatDouble(s.temperature);
    for (Index k = 0; k < m; ++k) out << "," << formatDouble(s.densities[k]);
    out << "\n";
  }
  writeFile(csv_path, out.str());

  json meta{{"phi", traj.phi},
            {"t0", traj.t0},
            {"mechanism_id", traj.mechanism_id},
            {"sample_dt", traj.sample_dt},
            {"n_points", traj.states.size()},
            {"rel_tol", config.rel_tol},
            {"abs_tol", config.abs_tol},
            {"species", species_names}};
  writeFile(metaPathFor(csv_path), meta.dump(2) + "\n");
}

TrajectoryFile loadTrajectory(const std::string& csv_path) {
  std::istringstream in(readFile(csv_path));
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory file: " + csv_path);
  auto header = splitCsvLine(line);
  if (header.size() < 2 || header[0] != "time" || header[1] != "temperature")
    throw std::runtime_error("bad trajectory header in " + csv_path);

  TrajectoryFile tf;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c].rfind("rho_", 0) != 0)
      throw std::runtime_error("bad trajectory column '" + header[c] + "' in " + csv_path);
    tf.species_names.push_back(header[c].substr(4));
  }
  const Index m = static_cast<Index>(tf.species_names.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = splitCsvLine(line);
    if (static_cast<Index>(fields.size()) != m + 2)
      throw std::runtime_error("bad trajectory row in " + csv_path);
    State s;
    s.time = toDouble(fields[0]);
    s.temperature = toDouble(fields[1]);
    s.densities.resize(m);
    for (Index k = 0; k < m; ++k) s.densities[k] = toDouble(fields[k + 2]);
    tf.trajectory.states.push_back(std::move(s));
  }
  if (tf.trajectory.states.size() >= 2)
    tf.trajectory.sample_dt =
        tf.trajectory.states[1].time - tf.trajectory.states[0].time;

  const std::string meta_path = metaPathFor(csv_path);
  if (fs::exists(meta_path)) {
    const json meta = json::parse(readFile(meta_path));
    tf.trajectory.phi = meta.value("phi", 0.0);
    tf.trajectory.t0 = meta.value("t0", 0.0);
    tf.trajectory.mechanism_id = meta.value("mechanism_id", "");
    tf.trajectory.sample_dt = meta.value("sample_dt", tf.trajectory.sample_dt);
  }
  return tf;
}

void saveDataset(const std::string& csv_path, const Dataset& dataset) {
  std::ostringstream out;
  out << "set_id,step";
  for (Index c = 0; c < dataset.inputs.cols(); ++c) out << ",x" << c;
  for (Index c = 0; c < dataset.targets.cols(); ++c) out << ",y" << c;
  out << "\n";
  for (Index r = 0; r < dataset.size(); ++r) {
    const SourceRef src = dataset.sources.empty() ? SourceRef{} : dataset.sources[r];
    out << src.set_id << "," << src.step;
    for (Index c = 0; c < dataset.inputs.cols(); ++c)
      out << "," << formatDouble(dataset.inputs(r, c));
    for (Index c = 0; c < dataset.targets.cols(); ++c)
      out << "," << formatDouble(dataset.targets(r, c));
    out << "\n";
  }
  writeFile(csv_path, out.str());

  json sets = json::array();
  for (const auto& s : dataset.sets)
    sets.push_back(json{{"set_id", s.set_id},
                        {"n_points", s.n_points},
                        {"phi", s.phi},
                        {"t0", s.t0},
                        {"multiplicity", s.multiplicity}});
  json input_scalers = json::array(), target_scalers = json::array();
  for (const auto& p : dataset.input_scalers) input_scalers.push_back(scalerToJson(p));
  for (const auto& p : dataset.target_scalers) target_scalers.push_back(scalerToJson(p));
  json meta{{"approach", approachName(dataset.approach)},
            {"dt", dataset.dt},
            {"input_scalers", input_scalers},
            {"target_scalers", target_scalers},
            {"sets", sets}};
  writeFile(metaPathFor(csv_path), meta.dump(2) + "\n");
}

Dataset loadDataset(const std::string& csv_path) {
  const json meta = json::parse(readFile(metaPathFor(csv_path)));
  Dataset ds;
  ds.approach = approachFromName(meta.at("approach").get<std::string>());
  ds.dt = meta.at("dt").get<double>();
  for (const auto& j : meta.at("input_scalers")) ds.input_scalers.push_back(scalerFromJson(j));
  for (const auto& j : meta.at("target_scalers")) ds.target_scalers.push_back(scalerFromJson(j));
  for (const auto& j : meta.at("sets")) {
    SetDescriptor s;
    s.set_id = j.at("set_id").get<int>();
    s.n_points = j.at("n_points").get<Index>();
    s.phi = j.at("phi").get<double>();
    s.t0 = j.at("t0").get<double>();
    s.multiplicity = j.at("multiplicity").get<int>();
    ds.sets.push_back(s);
  }

  const Index n_in = static_cast<Index>(ds.input_scalers.size());
  const Index n_out = static_cast<Index>(ds.target_scalers.size());
  std::istringstream in(readFile(csv_path));
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::array<double, 2>> dummy;
  std::vector<Vector> rows;
  std::vector<SourceRef> sources;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = splitCsvLine(line);
    if (static_cast<Index>(fields.size()) != 2 + n_in + n_out)
      throw std::runtime_error("bad dataset row in " + csv_path);
    sources.push_back({std::stoi(fields[0]), static_cast<Index>(std::stol(fields[1]))});
    Vector row(n_in + n_out);
    for (Index c = 0; c < n_in + n_out; ++c) row[c] = toDouble(fields[c + 2]);
    rows.push_back(std::move(row));
  }
  ds.inputs.resize(static_cast<Index>(rows.size()), n_in);
  ds.targets.resize(static_cast<Index>(rows.size()), n_out);
  for (Index r = 0; r < static_cast<Index>(rows.size()); ++r) {
    ds.inputs.row(r) = rows[r].head(n_in);
    ds.targets.row(r) = rows[r].tail(n_out);
  }
  ds.sources = std::move(sources);
  return ds;
}

void saveCheckpoint(const std::string& path, const ResNetParams& net,
                    const std::vector<ScalerParams>& input_scalers,
                    const ScalerParams& target_scaler, Approach approach, double dt,
                    Index channel, const std::vector<std::string>& channel_names) {
  json weights = json::array(), biases = json::array();
  for (const auto& k : net.weights) weights.push_back(matrixToJson(k));
  for (const auto& b : net.biases) biases.push_back(vectorToJson(b));
  json in_scalers = json::array();
  for (const auto& p : input_scalers) in_scalers.push_back(scalerToJson(p));

  json j{{"format", "stiffnet-checkpoint-v1"},
         {"channel", channel},
         {"channel_names", channel_names},
         {"approach", approachName(approach)},
         {"dt", dt},
         {"widths", net.widths},
         {"layer_count", net.layerCount()},
         {"hidden_layer_count", net.hiddenLayerCount()},
         {"tau", net.tau},
         {"epsilon", net.epsilon},
         {"weights", weights},
         {"biases", biases},
         {"input_scalers", in_scalers},
         {"target_scaler", scalerToJson(target_scaler)}};
  writeFile(path, j.dump(2) + "\n");
}

ResNetParams loadCheckpoint(const std::string& path) {
  const json j = json::parse(readFile(path));
  ResNetParams net;
  net.widths = j.at("widths").get<std::vector<Index>>();
  net.tau = j.at("tau").get<double>();
  net.epsilon = j.at("epsilon").get<double>();
  for (const auto& k : j.at("weights")) net.weights.push_back(matrixFromJson(k));
  for (const auto& b : j.at("biases")) net.biases.push_back(Vector(matrixFromJson(b)));
  validateShape(net);
  return net;
}

void saveSurrogate(const std::string& dir, const ParallelSurrogate& surrogate) {
  fs::create_directories(dir);
  json channels = json::array();
  for (Index c = 0; c < surrogate.outputCount(); ++c) {
    char name[32];
    std::snprintf(name, sizeof(name), "channel_%02d.json", static_cast<int>(c));
    saveCheckpoint((fs::path(dir) / name).string(), surrogate.nets[c],
                   surrogate.input_scalers, surrogate.target_scalers[c],
                   surrogate.approach, surrogate.dt, c, surrogate.channel_names);
    channels.push_back(name);
  }
  json j{{"format", "stiffnet-surrogate-v1"},
         {"approach", approachName(surrogate.approach)},
         {"dt", surrogate.dt},
         {"channel_names", surrogate.channel_names},
         {"channels", channels}};
  writeFile((fs::path(dir) / "surrogate.json").string(), j.dump(2) + "\n");
}

ParallelSurrogate loadSurrogate(const std::string& dir) {
  const json index = json::parse(readFile((fs::path(dir) / "surrogate.json").string()));
  ParallelSurrogate s;
  s.approach = approachFromName(index.at("approach").get<std::string>());
  s.dt = index.at("dt").get<double>();
  s.channel_names = index.at("channel_names").get<std::vector<std::string>>();
  for (const auto& name : index.at("channels")) {
    const std::string path = (fs::path(dir) / name.get<std::string>()).string();
    const json j = json::parse(readFile(path));
    s.nets.push_back(loadCheckpoint(path));
    if (s.input_scalers.empty())
      for (const auto& p : j.at("input_scalers")) s.input_scalers.push_back(scalerFromJson(p));
    s.target_scalers.push_back(scalerFromJson(j.at("target_scaler")));
  }
  return s;
}

void saveHistory(const std::string& path, const TrainHistory& history) {
  std::ostringstream out;
  out << "iter,train_loss,val_loss,step,grad_norm\n";
  for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
    out << i << "," << formatDouble(history.train_loss[i]) << ","
        << formatDouble(i < history.val_loss.size() ? history.val_loss[i] : 0.0) << ","
        << formatDouble(history.step_length[i]) << ","
        << formatDouble(history.grad_norm[i]) << "\n";
  }
  writeFile(path, out.str());
}

void saveMetrics(const std::string& path, const RolloutResult& result,
                 const std::vector<std::string>& channel_names) {
  json channels = json::object();
  for (Index c = 0; c < result.metrics.channel_rel_l2.size(); ++c) {
    const std::string name = c < static_cast<Index>(channel_names.size())
                                 ? channel_names[c]
                                 : "channel_" + std::to_string(c);
    channels[name] = result.metrics.channel_rel_l2[c];
  }
  json profile = json::array();
  for (Index i = 0; i < result.single_step_rel_error.size(); ++i)
    profile.push_back(result.single_step_rel_error[i]);
  json j{{"channel_rel_l2", channels},
         {"ignition_delay_pred", result.metrics.ignition_delay_pred},
         {"ignition_delay_ref", result.metrics.ignition_delay_ref},
         {"ignition_delay_rel_error", result.metrics.ignition_delay_rel_error},
         {"clip_count", result.clip_count},
         {"single_step_rel_error", profile}};
  writeFile(path, j.dump(2) + "\n");
}

void writeManifest(const std::string& path, const std::vector<std::string>& files) {
  json entries = json::array();
  for (const auto& f : files) {
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(hashFile(f)));
    entries.push_back(json{{"path", fs::path(f).filename().string()},
                           {"fnv1a64", hash},
                           {"bytes", fs::file_size(f)}});
  }
  writeFile(path, json{{"files", entries}}.dump(2) + "\n");
}

}  // namespace stiffnet
