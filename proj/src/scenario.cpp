#include "tscale/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tscale {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void parse_fail(const std::string& source, const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ": " + (path.empty() ? "" : path + ": ") + what);
}

class Reader {
public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  const json& require(const json& obj, const std::string& key, const std::string& path = "") const {
    if (!obj.is_object()) parse_fail(source_, path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) parse_fail(source_, path, "missing key '" + key + "'");
    return *it;
  }

  const json* optional(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) parse_fail(source_, path, "expected an object");
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) parse_fail(source_, path, "expected a number");
    return j.get<double>();
  }

  std::size_t count(const json& j, const std::string& path) const {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
      parse_fail(source_, path, "expected a non-negative integer");
    return j.get<std::size_t>();
  }

  const json& array(const json& j, const std::string& path) const {
    if (!j.is_array()) parse_fail(source_, path, "expected an array");
    return j;
  }

  std::vector<double> numbers(const json& j, const std::string& path) const {
    std::vector<double> out;
    std::size_t k = 0;
    for (const json& x : array(j, path)) out.push_back(number(x, path + "[" + std::to_string(k++) + "]"));
    return out;
  }

  Expr expression(const json& j, const std::string& path) const {
    if (!j.is_string()) parse_fail(source_, path, "expected an expression string");
    const std::string text = j.get<std::string>();
    try {
      return parse_expr(text);
    } catch (const SyntaxFailure& e) {
      parse_fail(source_, path, "\"" + text + "\" at offset " + std::to_string(e.position()) + ": " + e.what());
    } catch (const Error& e) {
      parse_fail(source_, path, "\"" + text + "\": " + e.what());
    }
  }

  std::vector<Expr> expressions(const json& j, const std::string& path) const {
    std::vector<Expr> out;
    std::size_t k = 0;
    for (const json& x : array(j, path)) out.push_back(expression(x, path + "[" + std::to_string(k++) + "]"));
    return out;
  }

  const std::string& source() const { return source_; }

private:
  std::string source_;
};

Mode parse_mode(const Reader& r, const json& j) {
  if (j == "delta") return Mode::Delta;
  if (j == "nabla") return Mode::Nabla;
  parse_fail(r.source(), "mode", "expected \"delta\" or \"nabla\"");
}

ControlSet parse_controls(const Reader& r, const json& j, std::size_t m) {
  if (const json* ball = r.optional(j, "ball", "controls")) return ControlSet::ball(m, r.number(*ball, "controls.ball"));
  if (const json* box = r.optional(j, "box", "controls")) {
    auto lo = r.numbers(r.require(*box, "lo", "controls.box"), "controls.box.lo");
    auto hi = r.numbers(r.require(*box, "hi", "controls.box"), "controls.box.hi");
    if (lo.size() != m) throw Error(ErrorCode::ValidationError, "controls.box has dimension " + std::to_string(lo.size()) + ", m = " + std::to_string(m));
    return ControlSet::box(std::move(lo), std::move(hi));
  }
  parse_fail(r.source(), "controls", "expected key 'ball' or 'box'");
}

// Re-labels construction errors from the core modules as validation errors.
template <class F>
auto validated(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ValidationError || e.code() == ErrorCode::ParseError) throw;
    throw Error(ErrorCode::ValidationError, what + ": " + e.what());
  }
}

}  // namespace

Scenario parse_scenario(std::string_view json_text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, source + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  const Reader r(source);
  if (!doc.is_object()) parse_fail(source, "", "top level must be an object");

  std::vector<Segment> segments;
  {
    const json& arr = r.array(r.require(doc, "timescale"), "timescale");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string path = "timescale[" + std::to_string(k) + "]";
      const auto pair = r.numbers(arr[k], path);
      if (pair.size() != 2) parse_fail(source, path, "expected [a, b]");
      segments.push_back({pair[0], pair[1]});
    }
  }
  TimeScale ts = validated("timescale", [&] { return TimeScale::make(segments); });

  const auto window = r.numbers(r.require(doc, "window"), "window");
  if (window.size() != 2) parse_fail(source, "window", "expected [t0, t1]");

  const Mode mode = parse_mode(r, r.require(doc, "mode"));
  const std::size_t n = r.count(r.require(doc, "n"), "n");
  const std::size_t m = r.count(r.require(doc, "m"), "m");
  std::vector<Expr> rhs = r.expressions(r.require(doc, "rhs"), "rhs");
  if (rhs.size() != n)
    throw Error(ErrorCode::ValidationError, "rhs has " + std::to_string(rhs.size()) + " components, n = " + std::to_string(n));
  ControlSet controls = validated("controls", [&] { return parse_controls(r, r.require(doc, "controls"), m); });
  ControlSystem system =
      validated("rhs", [&] { return ControlSystem::make(mode, n, std::move(rhs), std::move(controls)); });
  std::vector<double> fixed = r.numbers(r.require(doc, "fixed_control"), "fixed_control");

  const json& tj = r.require(doc, "tube");
  std::vector<Expr> lower = r.expressions(r.require(tj, "lower", "tube"), "tube.lower");
  std::vector<Expr> upper = r.expressions(r.require(tj, "upper", "tube"), "tube.upper");
  bool swapped = false;
  if (const json* sw = r.optional(tj, "swapped", "tube")) {
    if (!sw->is_boolean()) parse_fail(source, "tube.swapped", "expected a boolean");
    swapped = sw->get<bool>();
  }
  Tube tube = Tube::make(std::move(lower), std::move(upper), swapped);

  SolveOptions solve;
  if (const json* sj = r.optional(doc, "solve", "")) {
    if (const json* x = r.optional(*sj, "h_dense", "solve")) solve.h_dense = r.number(*x, "solve.h_dense");
    if (const json* x = r.optional(*sj, "implicit_tol", "solve")) solve.implicit_tol = r.number(*x, "solve.implicit_tol");
    if (const json* x = r.optional(*sj, "implicit_max_iter", "solve"))
      solve.implicit_max_iter = static_cast<int>(r.count(*x, "solve.implicit_max_iter"));
    if (const json* x = r.optional(*sj, "blowup_bound", "solve")) solve.blowup_bound = r.number(*x, "solve.blowup_bound");
  }
  SearchOptions search;
  if (const json* sj = r.optional(doc, "search", "")) {
    if (const json* x = r.optional(*sj, "lattice_size", "search")) search.lattice_size = r.count(*x, "search.lattice_size");
    if (const json* x = r.optional(*sj, "refinement_levels", "search"))
      search.refinement_levels = r.count(*x, "search.refinement_levels");
  }
  EgressSampling egress;
  egress.h_dense = solve.h_dense;
  if (const json* ej = r.optional(doc, "egress", "")) {
    if (const json* x = r.optional(*ej, "tangential_samples", "egress"))
      egress.tangential_samples = r.count(*x, "egress.tangential_samples");
  }

  Scenario s{std::move(ts), window[0], window[1], std::move(system), std::move(fixed), std::move(tube),
             solve,         search,    egress};
  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string serialize_scenario(const Scenario& s) {
  ordered_json doc;
  ordered_json segs = ordered_json::array();
  for (const Segment& seg : s.timescale.segments()) segs.push_back({seg.lo, seg.hi});
  doc["timescale"] = segs;
  doc["window"] = {s.t0, s.t1};
  doc["mode"] = to_string(s.mode());
  doc["n"] = s.n();
  doc["m"] = s.system.m();
  ordered_json rhs = ordered_json::array();
  for (const Expr& e : s.system.rhs()) rhs.push_back(e.str());
  doc["rhs"] = rhs;
  const ControlSet& cs = s.system.controls();
  if (cs.kind() == ControlSet::Kind::Ball)
    doc["controls"] = {{"ball", cs.radius()}};
  else
    doc["controls"] = {{"box", {{"lo", cs.lo()}, {"hi", cs.hi()}}}};
  doc["fixed_control"] = s.fixed_control;
  ordered_json lower = ordered_json::array(), upper = ordered_json::array();
  for (const Expr& e : s.tube.lower()) lower.push_back(e.str());
  for (const Expr& e : s.tube.upper()) upper.push_back(e.str());
  doc["tube"] = {{"lower", lower}, {"upper", upper}};
  if (s.tube.swapped()) doc["tube"]["swapped"] = true;
  doc["solve"] = {{"h_dense", s.solve.h_dense},
                  {"implicit_tol", s.solve.implicit_tol},
                  {"implicit_max_iter", s.solve.implicit_max_iter},
                  {"blowup_bound", s.solve.blowup_bound}};
  doc["search"] = {{"lattice_size", s.search.lattice_size}, {"refinement_levels", s.search.refinement_levels}};
  doc["egress"] = {{"tangential_samples", s.egress.tangential_samples}};
  return doc.dump(2) + "\n";
}

void validate_scenario(const Scenario& s) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::ValidationError, what); };
  if (!s.timescale.contains(s.t0) || !s.timescale.contains(s.t1)) fail("window endpoints must lie in the time scale");
  if (!(s.t0 < s.t1)) fail("window needs t0 < t1");
  if (s.tube.n() != s.n())
    fail("tube has " + std::to_string(s.tube.n()) + " coordinates, system has " + std::to_string(s.n()));
  if (s.fixed_control.size() != s.system.m())
    fail("fixed_control has " + std::to_string(s.fixed_control.size()) + " entries, m = " + std::to_string(s.system.m()));
  if (!s.system.controls().contains(s.fixed_control)) fail("fixed_control lies outside the control set");
  const SolveOptions& o = s.solve;
  if (!(o.h_dense > 0.0) || !(o.implicit_tol > 0.0) || o.implicit_max_iter <= 0 || !(o.blowup_bound > 0.0))
    fail("solve options must be positive");
  if (s.search.lattice_size == 0) fail("search.lattice_size must be positive");
  if (s.egress.tangential_samples == 0) fail("egress.tangential_samples must be positive");
  validated("tube", [&] {
    s.tube.validate(s.grid());
    return 0;
  });
}

Scenario dualize_scenario(const Scenario& s) {
  Scenario d{s.timescale.dual(), -s.t1,    -s.t0,    dualize_system(s.system), s.fixed_control, s.tube.dual(),
             s.solve,            s.search, s.egress};
  validate_scenario(d);
  return d;
}

}  // namespace tscale
