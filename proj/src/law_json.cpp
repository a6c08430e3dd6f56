#include "gmapprox/law_json.hpp"

#include <charconv>

#include "gmapprox/errors.hpp"

namespace gmapprox {

using nlohmann::json;

namespace {

double get_num(const json& j, const char* key, const char* alt = nullptr) {
  if (j.contains(key) && j[key].is_number()) return j[key].get<double>();
  if (alt && j.contains(alt) && j[alt].is_number()) return j[alt].get<double>();
  fail(ErrorCode::InvalidArgument, std::string("law field '") + key + "' missing or not a number");
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

json atomic_to_json(const AtomicLaw& a) { return json{{"atoms", a.atoms}, {"weights", a.weights}}; }

AtomicLaw atomic_from_json(const json& j) {
  if (!j.contains("atoms") || !j.contains("weights") || !j["atoms"].is_array() || !j["weights"].is_array())
    fail(ErrorCode::InvalidArgument, "atomic law needs 'atoms' and 'weights' arrays");
  return AtomicLaw::make(j["atoms"].get<std::vector<double>>(), j["weights"].get<std::vector<double>>());
}

json law_to_json(const MixingLaw& law) {
  json j;
  j["kind"] = law.kind_name();
  if (auto a = law.as<AtomicLaw>()) {
    j["atoms"] = a->atoms;
    j["weights"] = a->weights;
  } else if (auto u = law.as<UniformLaw>()) {
    j["halfwidth"] = u->halfwidth;
  } else if (auto g = law.as<GaussianLaw>()) {
    j["sigma"] = g->sigma;
  } else if (auto l = law.as<LaplaceLaw>()) {
    j["scale"] = l->scale;
  } else if (auto s = law.as<SubWeibullLaw>()) {
    j["alpha"] = s->alpha;
    j["beta"] = s->beta;
  } else if (auto p = law.as<TruncParetoLaw>()) {
    j["alpha"] = p->alpha;
    j["lower"] = p->lower;
    j["ratio"] = p->ratio;
    j["normalizer"] = p->normalizer;
  } else if (auto r = law.as<ArcLaw>()) {
    j["halfwidth"] = r->halfwidth;
    j["arc"] = r->arc;
  } else if (auto c = law.as<ConditionedLaw>()) {
    j["base"] = law_to_json(*c->base);
    j["lower"] = c->lower;
    j["upper"] = c->upper;
  } else if (auto sc = law.as<ScaledLaw>()) {
    j["base"] = law_to_json(*sc->base);
    j["factor"] = sc->factor;
  }
  return j;
}

MixingLaw law_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    fail(ErrorCode::InvalidArgument, "law must be an object with a string 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "atomic") return MixingLaw(atomic_from_json(j));
  if (kind == "point") return MixingLaw::point(get_num(j, "at"));
  if (kind == "uniform") return MixingLaw::uniform(get_num(j, "halfwidth", "M"));
  if (kind == "gaussian") return MixingLaw::gaussian(get_num(j, "sigma"));
  if (kind == "laplace") return MixingLaw::laplace(get_num(j, "scale", "lambda"));
  if (kind == "sub_weibull") return MixingLaw::sub_weibull(get_num(j, "alpha"), get_num(j, "beta"));
  if (kind == "truncated_pareto") {
    if (j.contains("normalizer"))
      return MixingLaw::truncated_pareto(get_num(j, "alpha"), get_num(j, "lower"), get_num(j, "ratio"),
                                         get_num(j, "normalizer"));
    return MixingLaw::pareto_moment_law(get_num(j, "alpha"), get_num(j, "beta"), get_num(j, "ratio"));
  }
  if (kind == "arc") return MixingLaw::arc(get_num(j, "halfwidth", "M"), get_num(j, "arc", "b"));
  if (kind == "conditioned") {
    if (!j.contains("base")) fail(ErrorCode::InvalidArgument, "conditioned law needs 'base'");
    return condition(law_from_json(j["base"]), get_num(j, "lower"), get_num(j, "upper")).law;
  }
  if (kind == "scaled") {
    if (!j.contains("base")) fail(ErrorCode::InvalidArgument, "scaled law needs 'base'");
    return MixingLaw::scaled(law_from_json(j["base"]), get_num(j, "factor"));
  }
  fail(ErrorCode::InvalidArgument, "unknown law kind '" + kind + "'");
}

}  // namespace gmapprox
