#include "hifisher/core.hpp"
#include "hifisher/models.hpp"

namespace hifisher {

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {
      "gaussian2", "studentt", "lasso", "mixture", "hyperbolic"};
  return names;
}

HierarchicalModel make_model(const std::string& name, const ModelOptions& opts) {
  HierarchicalModel m;
  if (name == "gaussian2") {
    m = make_gaussian2(opts.mu, opts.delta);
  } else if (name == "gaussian2_variance") {
    m = make_gaussian2_variance(opts.mu, opts.delta);
  } else if (name == "studentt") {
    m = make_studentt();
  } else if (name == "lasso") {
    m = make_lasso(opts.p, opts.sigma);
  } else if (name == "mixture") {
    m = make_gaussian_mixture(opts.means, opts.sds);
  } else if (name == "hyperbolic") {
    m = make_hyperbolic();
  } else {
    std::string known;
    for (const auto& n : model_names()) known += " " + n;
    throw ConfigError("unknown model '" + name + "'; known:" + known);
  }
  validate_model(m);
  return m;
}

}  // namespace hifisher
