#include <cmath>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "vibronic/trace_io.hpp"

using namespace vibronic;

TEST_CASE("csv round trip is exact") {
    testgen::Gen gen(17);
    for (int i = 0; i < testgen::kCases; ++i) {
        CorrelationTrace t;
        t.axis = gen.integer(0, 1) ? Axis::t : Axis::tau;
        t.op_first = Detector::phonon;
        t.op_second = gen.integer(0, 1) ? Detector::photon : Detector::none;
        t.normalized = gen.integer(0, 1) == 1;
        t.reference_value = t.normalized ? gen.uniform(1e-3, 2.0) : 0.0;
        t.t_anchor = gen.uniform(0.0, 10.0);
        double x = 0.0;
        for (int k = 0; k < gen.integer(1, 50); ++k) {
            x += gen.uniform(1e-6, 0.1);
            t.grid.push_back(x);
            t.values.push_back(gen.normal() * std::pow(10.0, gen.integer(-20, 5)));
        }
        const Metadata meta = {{"eta_cm1", "5"}, {"quantity", "g2"}};
        std::stringstream ss;
        write_csv(t, meta, ss);
        const CsvTrace back = read_csv(ss);
        CHECK(back.trace == t);
        CHECK(back.metadata == meta);
    }
}

TEST_CASE("csv layout") {
    CorrelationTrace t;
    t.axis = Axis::tau;
    t.grid = {0.0, 0.001};
    t.values = {0.1, 1.0 / 3.0};
    std::ostringstream os;
    write_csv(t, {{"k", "v"}}, os);
    const std::string s = os.str();
    CHECK(s.find("# axis=tau\n") == 0);
    CHECK(s.find("# k=v\ntau_ps,value\n") != std::string::npos);
    CHECK(s.find("0.001,0.33333333333333331\n") != std::string::npos);
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("csv errors") {
    std::stringstream no_header("# axis=t\n0,1\n");
    CHECK_THROWS_AS(read_csv(no_header), std::runtime_error);
    std::stringstream bad_num("t_ps,value\n0,abc\n");
    CHECK_THROWS_WITH_AS(read_csv(bad_num), "csv:2: bad number 'abc'", std::runtime_error);
    std::stringstream late_meta("t_ps,value\n0,1\n# a=b\n");
    CHECK_THROWS_AS(read_csv(late_meta), std::runtime_error);
    std::stringstream unsorted("t_ps,value\n1,1\n0,1\n");
    CHECK_THROWS_AS(read_csv(unsorted), std::invalid_argument);
}

TEST_CASE("svg shares axes and leaves data untouched") {
    CorrelationTrace a, b;
    a.grid = {0.0, 1.0, 2.0};
    a.values = {0.0, 1.0, 0.5};
    b.grid = {0.0, 1.0, 2.0, 4.0};
    b.values = {-1.0, 0.0, 3.0, 2.0};
    const CorrelationTrace a_copy = a, b_copy = b;
    std::ostringstream os;
    write_svg({{"first <a>", &a}, {"second", &b}}, "title & co", os);
    const std::string s = os.str();
    CHECK(s.find("<svg") == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') > 10);
    std::size_t polylines = 0;
    for (std::size_t p = s.find("<polyline"); p != std::string::npos; p = s.find("<polyline", p + 1)) ++polylines;
    CHECK(polylines == 2);
    CHECK(s.find("first &lt;a&gt;") != std::string::npos);
    CHECK(s.find("title &amp; co") != std::string::npos);
    // x range spans both traces: the last point of b sits at the right edge (80 + 520)
    CHECK(s.find("600.00,") != std::string::npos);
    CHECK(a == a_copy);
    CHECK(b == b_copy);
}
