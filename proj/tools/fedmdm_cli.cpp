#include "fedmdm/cli.hpp"

int main(int argc, char** argv) { return fedmdm::cli::run(argc, argv); }
