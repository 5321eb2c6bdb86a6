#include "sparsevo/oracle.hpp"

#include <charconv>

#include "sparsevo/errors.hpp"
#include "sparsevo/toy_models.hpp"
#include "sparsevo/wire.hpp"

namespace sparsevo {

void QueryBudget::charge() {
  if (used_ >= limit_) throw BudgetExhausted();
  ++used_;
}

namespace {

template <class T>
T parse_number(std::string_view text, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ContractError(std::string("oracle selector: bad ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

OracleFactory toy_factory(std::shared_ptr<const ToyModel> model) {
  return [model] { return std::make_unique<ToyOracle>(model); };
}

}  // namespace

std::shared_ptr<const ToyModel> parse_toy_selector(const std::string& selector, Shape shape, int num_classes) {
  const std::string_view s(selector);
  if (s.starts_with("toy:linear:") || s.starts_with("toy:mlp2:")) {
    const bool linear = s.starts_with("toy:linear:");
    ToyModelSpec spec;
    spec.kind = linear ? ToyKind::linear : ToyKind::mlp2;
    spec.seed = parse_number<std::uint64_t>(s.substr(linear ? 11 : 9), "seed");
    spec.num_classes = num_classes;
    spec.shape = shape;
    return make_toy_model(spec);
  }
  if (s.starts_with("toy:centroid:")) {
    return std::make_shared<NearestCentroidModel>(read_centroids(std::string(s.substr(13))));
  }
  throw ContractError("unknown toy model selector '" + selector + "'");
}

OracleFactory parse_oracle_selector(const std::string& selector, Shape shape, int num_classes) {
  const std::string_view s(selector);
  if (s.starts_with("toy:")) return toy_factory(parse_toy_selector(selector, shape, num_classes));
  if (s.starts_with("exec:")) {
    const std::string command(s.substr(5));
    if (command.empty()) throw ContractError("oracle selector: empty exec command");
    return [command] {
      return std::make_unique<wire::RemoteOracle>(std::make_unique<wire::ProcessChannel>(command));
    };
  }
  if (s.starts_with("tcp:")) {
    const auto rest = s.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) throw ContractError("oracle selector: expected tcp:<host>:<port>");
    const std::string host(rest.substr(0, colon));
    const auto port = parse_number<std::uint16_t>(rest.substr(colon + 1), "port");
    return [host, port] { return std::make_unique<wire::RemoteOracle>(wire::connect_tcp(host, port)); };
  }
  throw ContractError("unknown oracle selector '" + selector + "'");
}

}  // namespace sparsevo
