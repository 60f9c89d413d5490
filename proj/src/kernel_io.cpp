#include "infinichain/kernel_io.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "infinichain/errors.hpp"

namespace infinichain {

namespace {

const std::map<std::string, std::string>& builtins() {
  static const std::map<std::string, std::string> table = {
      {"iid_uniform",
       "family = mixture\nalphabet = 2\nweights = [1]\nq0 = uniform\n"},
      {"markov1",
       "family = markov\nalphabet = 2\norder = 1\ntable = [0.9, 0.1, 0.2, 0.8]\n"},
      {"markov2",
       "family = markov\nalphabet = 2\norder = 2\n"
       "table = [0.7, 0.3, 0.4, 0.6, 0.6, 0.4, 0.2, 0.8]\n"},
      {"renewal_p04", "family = renewal\np = [0.4]\ntail = constant\n"},
      {"renewal_alt", "family = renewal\np = [0.4, 0.3]\ntail = periodic\n"},
      {"renewal_half", "family = renewal\np = [0.5, 0.3]\ntail = constant\n"},
      {"mixture_532",
       "family = mixture\nalphabet = 2\nweights = [0.5, 0.3, 0.2]\n"
       "q0 = uniform\nq1 = [0.9, 0.1, 0.3, 0.7]\nq2 = copy\n"},
      {"mixture_geom8",
       "family = mixture\nalphabet = 2\nweights = [256, 128, 64, 32, 16, 8, 4, 2, 1]\n"
       "normalize = true\nq0 = uniform\n"
       "q1 = copy\nq2 = copy\nq3 = copy\nq4 = copy\nq5 = copy\nq6 = copy\nq7 = copy\nq8 = copy\n"},
      {"mixture_vwnn",
       "family = mixture\nalphabet = 3\nweights = [0, 0.8, 0.2]\nq0 = uniform\n"
       "q1 = [0.5, 0.5, 0, 0.5, 0, 0.5, 0, 0.5, 0.5]\nq2 = copy\n"},
  };
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw InvalidKernel("expected [..] list for " + key);
  std::vector<double> out;
  std::stringstream ss(v.substr(1, v.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidKernel("bad number '" + item + "' in " + key);
    }
  }
  return out;
}

Eigen::MatrixXd to_table(const std::vector<double>& flat, Eigen::Index rows, Eigen::Index cols,
                         const std::string& key) {
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw InvalidKernel(key + " needs " + std::to_string(rows * cols) + " values");
  Eigen::MatrixXd t(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  return t;
}

int to_int(const std::map<std::string, std::string>& kv, const std::string& key, int fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw InvalidKernel("bad integer for " + key);
  }
}

}  // namespace

Kernel parse_kernel(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::string pending_key, pending_val;
  std::stringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    if (!pending_key.empty()) {
      pending_val += " " + line;
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw InvalidKernel("expected key = value: " + line);
      pending_key = trim(line.substr(0, eq));
      pending_val = trim(line.substr(eq + 1));
    }
    // lists may span several lines
    if (pending_val.find('[') != std::string::npos && pending_val.find(']') == std::string::npos) continue;
    kv[pending_key] = pending_val;
    pending_key.clear();
  }
  if (!pending_key.empty()) throw InvalidKernel("unterminated list for " + pending_key);

  const auto family = kv.count("family") ? kv.at("family") : std::string{};
  const std::string name = kv.count("name") ? kv.at("name") : family;

  if (family == "renewal") {
    if (!kv.count("p")) throw InvalidKernel("renewal kernel needs p");
    auto p = parse_list(kv.at("p"), "p");
    if (p.empty()) throw InvalidKernel("p must be nonempty");
    std::vector<double> head = kv.count("head") ? parse_list(kv.at("head"), "head") : std::vector<double>{};
    const std::string tail = kv.count("tail") ? kv.at("tail") : "constant";
    std::vector<double> cycle;
    if (tail == "constant") {
      head.insert(head.end(), p.begin(), p.end() - 1);
      cycle = {p.back()};
    } else if (tail == "periodic") {
      cycle = p;
    } else {
      throw InvalidKernel("tail must be constant or periodic");
    }
    return Kernel::renewal(std::move(head), std::move(cycle), name);
  }

  const int n = to_int(kv, "alphabet", 2);
  if (n < 2) throw InvalidKernel("alphabet must be at least 2");

  if (family == "markov") {
    const int order = to_int(kv, "order", 1);
    if (!kv.count("table")) throw InvalidKernel("markov kernel needs table");
    const auto rows = static_cast<Eigen::Index>(ipow(static_cast<std::uint64_t>(n), static_cast<std::size_t>(order)));
    return Kernel::markov(n, order, to_table(parse_list(kv.at("table"), "table"), rows, n, "table"), name);
  }

  if (family == "mixture") {
    if (!kv.count("weights")) throw InvalidKernel("mixture kernel needs weights");
    auto w = parse_list(kv.at("weights"), "weights");
    Eigen::VectorXd weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    if (kv.count("normalize") && kv.at("normalize") == "true") weights /= weights.sum();
    std::vector<Eigen::MatrixXd> comps;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const auto rows = static_cast<Eigen::Index>(ipow(static_cast<std::uint64_t>(n), j));
      const std::string key = "q" + std::to_string(j);
      const std::string v = kv.count(key) ? kv.at(key) : (j == 0 ? "uniform" : "copy");
      if (v == "uniform") {
        comps.push_back(Eigen::MatrixXd::Constant(rows, n, 1.0 / n));
      } else if (v == "copy") {
        if (j == 0) throw InvalidKernel("q0 cannot copy");
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows, n);
        const auto span = static_cast<Eigen::Index>(ipow(static_cast<std::uint64_t>(n), j - 1));
        for (Eigen::Index r = 0; r < rows; ++r) t(r, (r / span) % n) = 1.0;
        comps.push_back(std::move(t));
      } else {
        comps.push_back(to_table(parse_list(v, key), rows, n, key));
      }
    }
    return Kernel::mixture(n, std::move(weights), std::move(comps), name);
  }

  throw InvalidKernel("unknown family '" + family + "'");
}

std::vector<std::string> builtin_kernel_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : builtins()) out.push_back(k);
  return out;
}

std::string builtin_kernel_text(const std::string& name) {
  auto it = builtins().find(name);
  if (it == builtins().end()) throw InvalidKernel("no builtin kernel named " + name);
  return it->second;
}

Kernel load_kernel(const std::string& name_or_path) {
  if (auto it = builtins().find(name_or_path); it != builtins().end()) {
    auto k = parse_kernel(it->second);
    k.set_name(name_or_path);
    return k;
  }
  std::ifstream f(name_or_path);
  if (!f) throw InvalidKernel("cannot open kernel '" + name_or_path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  auto k = parse_kernel(ss.str());
  if (k.name() == "renewal" || k.name() == "markov" || k.name() == "mixture")
    k.set_name(std::filesystem::path(name_or_path).stem().string());
  return k;
}

}  // namespace infinichain
