#include <doctest.h>

#include "helpers.hpp"
#include "srmcts/errors.hpp"
#include "srmcts/mutation.hpp"

using namespace srmcts;

namespace {

Mutation mut(std::size_t anchor, MutationOp op, const char* arg = nullptr)
{
    Mutation m{anchor, op, std::nullopt};
    if (arg) m.arg = parse_prefix(arg);
    return m;
}

} // namespace

TEST_CASE("mutation op tables")
{
    for (int i = 0; i < kNumMutationOps; ++i) {
        const auto op = static_cast<MutationOp>(i);
        CHECK(mutation_op_from_name(mutation_op_name(op)) == op);
        if (op != MutationOp::root_replace) CHECK(growth_op(growth_index(op)) == op);
    }
    CHECK(wrapped_kind(MutationOp::wrap_square) == OpKind::square);
    CHECK(inserted_kind(MutationOp::div_left) == OpKind::div);
    CHECK(binary_op(OpKind::sub, false) == MutationOp::sub_right);
    CHECK(wrap_op(OpKind::log) == MutationOp::wrap_log);
}

TEST_CASE("apply_mutation examples")
{
    CHECK(apply_mutation({}, mut(0, MutationOp::root_replace, "x0")) == parse_prefix("x0"));
    CHECK(apply_mutation(parse_prefix("x0"), mut(1, MutationOp::add_right, "x1")) == parse_prefix("add x0 x1"));
    CHECK(apply_mutation(parse_prefix("add x0 x1"), mut(3, MutationOp::wrap_cos)) == parse_prefix("add x0 cos x1"));
    CHECK(apply_mutation(parse_prefix("x0"), mut(1, MutationOp::sub_left, "x1")) == parse_prefix("sub x1 x0"));
    CHECK(apply_mutation(parse_prefix("mul x0 x1"), mut(1, MutationOp::div_right, "x2")) ==
          parse_prefix("div mul x0 x1 x2"));
    CHECK_THROWS_AS(apply_mutation(parse_prefix("cos x0"), mut(2, MutationOp::wrap_sin)), ConstraintViolation);
    CHECK_THROWS_AS(apply_mutation(parse_prefix("x0"), mut(5, MutationOp::wrap_sin)), InvalidMutation);
}

TEST_CASE("validate_mutation examples")
{
    const auto x0 = parse_prefix("x0");
    CHECK(validate_mutation(x0, mut(5, MutationOp::add_right, "x1")) == MutationError::bad_index);
    CHECK(validate_mutation(x0, mut(0, MutationOp::add_right, "x1")) == MutationError::bad_index);
    CHECK(validate_mutation(x0, mut(1, MutationOp::add_right)) == MutationError::missing_arg);
    CHECK(validate_mutation(x0, mut(1, MutationOp::wrap_cos)) == MutationError::none);
    CHECK(validate_mutation(x0, mut(1, MutationOp::wrap_cos, "x1")) == MutationError::extra_arg);
    CHECK(validate_mutation(x0, mut(0, MutationOp::root_replace, "x1")) == MutationError::root_replace_on_nonempty);
    CHECK(validate_mutation({}, mut(1, MutationOp::wrap_cos)) == MutationError::growth_on_empty);
    CHECK(validate_mutation({}, mut(0, MutationOp::root_replace)) == MutationError::missing_arg);
    Mutation empty_b{1, MutationOp::add_right, Expression{}};
    CHECK(validate_mutation(x0, empty_b) == MutationError::empty_arg);
}

TEST_CASE("strict growth for every valid mutation")
{
    Rng rng = make_rng(4);
    for (int i = 0; i < 300; ++i) {
        const auto e = testutil::random_expression(rng, 30);
        for (int k = 0; k < kNumMutationOps; ++k) {
            const auto op = static_cast<MutationOp>(k);
            if (op == MutationOp::root_replace) continue;
            Mutation m{static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(e.size()))), op, std::nullopt};
            if (requires_arg(op)) m.arg = testutil::random_expression(rng, 5);
            const auto out = apply_unchecked(e, m);
            CHECK(out.size() > e.size());
            CHECK(out.size() == e.size() + 1 + (m.arg ? m.arg->size() : 0));
        }
    }
}

TEST_CASE("dismantle examples")
{
    Rng rng = make_rng(5);
    for (std::size_t goal : {std::size_t{1}, std::size_t{10}, kUnboundedGoal}) {
        const auto t = dismantle(parse_prefix("x0"), goal, rng);
        REQUIRE(t.steps.size() == 1);
        CHECK(t.steps[0].mutation == mut(0, MutationOp::root_replace, "x0"));
        CHECK(t.steps[0].state.empty());
    }
    // x0 + x1 at goal 1: exactly the two hand-enumerated dismantlings appear
    bool right = false, left = false;
    for (int i = 0; i < 50; ++i) {
        const auto t = dismantle(parse_prefix("add x0 x1"), 1, rng);
        REQUIRE(t.steps.size() == 2);
        if (t.steps[0].mutation == mut(0, MutationOp::root_replace, "x0") &&
            t.steps[1].mutation == mut(1, MutationOp::add_right, "x1"))
            right = true;
        else if (t.steps[0].mutation == mut(0, MutationOp::root_replace, "x1") &&
                 t.steps[1].mutation == mut(1, MutationOp::add_left, "x0"))
            left = true;
        else
            FAIL("unexpected dismantling");
    }
    CHECK(right);
    CHECK(left);
}

TEST_CASE("figure-two expression replays")
{
    // 6.67 * x1 * x2 / x0^2
    const auto f = parse_prefix("div mul mul 6.67 x1 x2 square x0");
    Rng rng = make_rng(6);
    for (std::size_t goal : {std::size_t{1}, std::size_t{3}, kUnboundedGoal}) {
        const auto t = dismantle(f, goal, rng);
        CHECK(replay(t) == f);
        CHECK(t.target == f);
    }
}

TEST_CASE("replay(dismantle(f)) is the identity and every intermediate is admissible")
{
    Rng rng = make_rng(7);
    for (std::size_t goal : {std::size_t{1}, std::size_t{10}, kUnboundedGoal}) {
        for (int i = 0; i < 300; ++i) {
            const auto f = testutil::random_expression(rng, 60);
            const auto t = dismantle(f, goal, rng);
            CHECK(replay(t) == f);
            for (const auto& s : t.steps) CHECK(check_constraints(s.state) == Violation::none);
            if (goal == kUnboundedGoal) CHECK(t.steps.size() == 1);
            if (goal == 1) {
                // every operator node is removed one at a time
                std::size_t ops = 0;
                for (const auto& n : f.nodes()) ops += is_leaf(n.kind) ? 0 : 1;
                CHECK(t.steps.size() == ops + 1);
            }
        }
    }
}

TEST_CASE("replay rejects corrupt traces")
{
    MutationTrace t;
    CHECK_THROWS_AS(replay(t), InvalidMutation);
    t.steps.push_back({Expression{}, mut(1, MutationOp::wrap_cos)});
    CHECK_THROWS_AS(replay(t), InvalidMutation);
}
