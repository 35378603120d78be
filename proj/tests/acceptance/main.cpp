#include "backlab/acceptance.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    backlab::AcceptanceOptions o;
    for (int i = 1; i < argc; ++i) o.only.insert(std::atoi(argv[i]));
    o.log = &std::cout;
    auto results = backlab::run_acceptance(o);
    int failed = 0;
    for (const auto& r : results) failed += !r.pass;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
    return failed ? 1 : 0;
}
