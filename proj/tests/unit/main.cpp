#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>

#include "etfrank/cli.hpp"

int main(int argc, char** argv) {
    // Training progress is noise here; ETFRANK_LOG still overrides.
    ::setenv("ETFRANK_LOG", "warn", 0);
    etfrank::configure_logging_from_env();
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
