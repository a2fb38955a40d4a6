#include <voxmetrics/cli.hpp>

int main(int argc, char** argv) { return voxmetrics::cli::run(argc, argv); }
