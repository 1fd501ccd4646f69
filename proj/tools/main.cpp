#include "steinops/cli_app.hpp"

int main(int argc, char** argv) { return steinops::cli::run(argc, argv); }
