#include "agmrf/cli.hpp"

int main(int argc, char** argv) { return agmrf::cli::dispatch(argc, argv); }
