#include <catch2/catch_amalgamated.hpp>

#include "berknash/example_zoo.hpp"
#include "berknash/modeldoc.hpp"

using namespace berknash;

namespace {

const char* kAr1Doc = R"(
# gaussian state recursion
state.dim = 1
state.axis0.name = s
state.axis0.bounds = unbounded
state.axis0.cells = 101
state.axis0.init = gaussian(0, 1)
action.domain = {0}
theta.dim = 2
theta.axis0.grid = grid(0, 2, 21)
theta.axis1.grid = grid(0.1, 1, 10)
kernel.true.axis0.family = gaussian-linear
kernel.true.axis0.a = 0.5
kernel.true.axis0.b = 1.0
kernel.model.axis0.family = gaussian-linear
kernel.model.axis0.a = param[0]
kernel.model.axis0.b = param[1]
payoff.kind = constant
payoff.value = 0
solve.discount = 0.95
solve.radius = 10
solve.seed = 7
)";

}  // namespace

TEST_CASE("parse a full gaussian document") {
  const ModelDocument md = parse_model_document(kAr1Doc);
  CHECK(md.spec.state_axes.size() == 1);
  CHECK_FALSE(md.spec.state_axes[0].bounded());
  CHECK(md.grids.state_cells[0] == 101);
  CHECK(md.spec.action.explicit_values == std::vector<double>{0.0});
  REQUIRE(md.spec.theta_box.size() == 2);
  CHECK(md.spec.theta_box[1].first == 0.1);
  CHECK(md.grids.theta_points[1] == 10);
  const auto& g = std::get<GaussianLinear1D>(md.spec.true_kernel.coords[0]);
  CHECK(g.a.literal == 0.5);
  const auto& m = std::get<GaussianLinear1D>(md.spec.model_family.coords[0]);
  CHECK(m.a.param_index == 0);
  CHECK(m.b.param_index == 1);
  CHECK(md.spec.discount == 0.95);
  CHECK(md.solve.seed == 7);
  CHECK(md.level[0].first == -10.0);
  CHECK(md.spec.init[0].kind == InitAxis::Kind::Gaussian);
}

TEST_CASE("malformed documents carry the field path") {
  CHECK_THROWS_WITH(parse_model_document("state.dim = 1\n"),
                    Catch::Matchers::ContainsSubstring("state.axis0.bounds"));
  CHECK_THROWS_WITH(parse_model_document("foo\n"), Catch::Matchers::ContainsSubstring("line 1"));
  std::string doc = kAr1Doc;
  doc += "\nbogus.key = 1\n";
  CHECK_THROWS_WITH(parse_model_document(doc), Catch::Matchers::ContainsSubstring("bogus.key"));
  // duplicate key
  std::string dup = kAr1Doc;
  dup += "\nsolve.seed = 9\n";
  CHECK_THROWS_WITH(parse_model_document(dup), Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("discount outside [0,1) is a domain error") {
  std::string doc = kAr1Doc;
  const auto pos = doc.find("solve.discount = 0.95");
  doc.replace(pos, 21, "solve.discount = 1.00");
  CHECK_THROWS_AS(parse_model_document(doc), DomainError);
}

TEST_CASE("every example round-trips through its document form") {
  for (const std::string id : {"ar1", "ar1-action", "savings", "cost", "revenue"}) {
    Example ex = make_example(id);
    const std::string doc = serialize_model_document(ex.spec, ex.grids, ex.level, 3);
    const ModelDocument md = parse_model_document(doc);
    CHECK(md.spec.state_axes.size() == ex.spec.state_axes.size());
    CHECK(md.spec.theta_box.size() == ex.spec.theta_box.size());
    CHECK(md.spec.discount == ex.spec.discount);
    CHECK(md.grids.state_cells == ex.grids.state_cells);
    CHECK(md.grids.action_points == ex.grids.action_points);
    CHECK(md.spec.payoff.kind == ex.spec.payoff.kind);

    // the discretized objects agree row by row on a probe set
    GridSpec small = md.grids;
    for (auto& c : small.state_cells) c = std::max<size_t>(6, c / 16);
    if (small.action_points > 1) small.action_points = 5;
    for (auto& t : small.theta_points) t = std::max<size_t>(2, t / 16);
    GridSpec small_ex = small;
    small_ex.theta_lo_override = ex.grids.theta_lo_override;

    const FiniteSMDP fa = discretize_smdp(md.spec, md.level, small);
    const FiniteSMDP fb = discretize_smdp(ex.spec, ex.level, small_ex);
    REQUIRE(fa.n_states() == fb.n_states());
    for (size_t s = 0; s < fa.n_states(); s += 3)
      for (size_t x = 0; x < fa.n_actions(); x += 2) {
        const auto ra = fa.dense_true_row(s, x);
        const auto rb = fb.dense_true_row(s, x);
        for (size_t i = 0; i < ra.size(); ++i) REQUIRE(ra[i] == Catch::Approx(rb[i]).margin(1e-14));
      }
  }
}

TEST_CASE("theta grid override from the ladder is reflected in the document") {
  Example ex = make_example("ar1");
  const std::string doc = serialize_model_document(ex.spec, ex.grids, ex.level, 1);
  // the b-dimension grid starts at the dense-set floor, not 0
  CHECK(doc.find("theta.axis1.grid = grid(0.1, 1, 10)") != std::string::npos);
}

TEST_CASE("tabulated kernels parse from documents") {
  const char* doc = R"(
state.dim = 1
state.axis0.bounds = [0, 2]
state.axis0.cells = 2
action.domain = {0}
theta.dim = 1
theta.axis0.grid = grid(0, 0, 1)
kernel.true.axis0.family = tabulated
kernel.true.axis0.edges = {0, 1, 2}
kernel.true.axis0.dep_axis = 0
kernel.true.axis0.n_dep_state = 2
kernel.true.axis0.row0 = {0.9, 0.1}
kernel.true.axis0.row1 = {0.2, 0.8}
payoff.kind = constant
solve.discount = 0.5
)";
  const ModelDocument md = parse_model_document(doc);
  const FiniteSMDP f = discretize_smdp(md.spec, md.level, md.grids);
  const auto r0 = f.dense_true_row(0, 0);
  CHECK(r0[0] == Catch::Approx(0.9));
  CHECK(r0[1] == Catch::Approx(0.1));
}
