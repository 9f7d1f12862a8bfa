#include <catch2/catch_amalgamated.hpp>

#include "dts/matrix.hpp"

using namespace dts;

TEST_CASE("matmul matches hand computation", "[matrix]") {
    DenseMatrix a(2, 3, {1, 2, 3, 4, 5, 6});
    DenseMatrix b(3, 2, {7, 8, 9, 10, 11, 12});
    DenseMatrix c = matmul(a, b);
    REQUIRE(c.rows == 2);
    REQUIRE(c.cols == 2);
    CHECK(c(0, 0) == 58);
    CHECK(c(0, 1) == 64);
    CHECK(c(1, 0) == 139);
    CHECK(c(1, 1) == 154);
}

TEST_CASE("transpose-flavoured products agree with explicit transpose", "[matrix]") {
    DenseMatrix a(3, 2, {1, -2, 0.5, 3, -1, 4});
    DenseMatrix b(3, 4, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    DenseMatrix at(2, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) at(j, i) = a(i, j);
    DenseMatrix expected = matmul(at, b);
    DenseMatrix got = matmul_tn(a, b);
    for (std::size_t i = 0; i < expected.size(); ++i)
        CHECK(got.data[i] == Catch::Approx(expected.data[i]));

    DenseMatrix c(2, 4, {1, 0, -1, 2, 3, 1, 0, -2});
    DenseMatrix ct(4, 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 4; ++j) ct(j, i) = c(i, j);
    DenseMatrix expected2 = matmul(b, ct);
    DenseMatrix got2 = matmul_nt(b, c);
    for (std::size_t i = 0; i < expected2.size(); ++i)
        CHECK(got2.data[i] == Catch::Approx(expected2.data[i]));
}

TEST_CASE("shape mismatches name both shapes", "[matrix]") {
    DenseMatrix a(2, 3), b(2, 3);
    CHECK_THROWS_MATCHES(matmul(a, b), DimensionError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("2x3") &&
                             Catch::Matchers::ContainsSubstring("matmul")));
    DenseMatrix c(1, 4);
    CHECK_THROWS_AS(a += c, DimensionError);
    CHECK_THROWS_AS(hcat(a, c), DimensionError);
    CHECK_THROWS_AS(vcat(a, c), DimensionError);
}

TEST_CASE("slicing and concatenation round trip", "[matrix]") {
    DenseMatrix a(2, 2, {1, 2, 3, 4});
    DenseMatrix b(2, 1, {5, 6});
    DenseMatrix joined = hcat(a, b);
    REQUIRE(joined.cols == 3);
    DenseMatrix left = slice_cols(joined, 0, 2);
    DenseMatrix right = slice_cols(joined, 2, 3);
    CHECK(left.data == a.data);
    CHECK(right.data == b.data);

    DenseMatrix stacked = vcat(a, a);
    REQUIRE(stacked.rows == 4);
    const std::size_t idx[] = {2, 0};
    DenseMatrix taken = take_rows(stacked, idx);
    CHECK(taken(0, 0) == 1);
    CHECK(taken(1, 0) == 1);
}

TEST_CASE("column sums and row vector addition", "[matrix]") {
    DenseMatrix m(2, 2, {1, 2, 3, 4});
    const auto sums = column_sums(m);
    CHECK(sums[0] == 4);
    CHECK(sums[1] == 6);
    const double v[] = {10, 20};
    add_row_vector(m, v);
    CHECK(m(0, 0) == 11);
    CHECK(m(1, 1) == 24);
}
