#include "citegen/cli.hpp"

int main(int argc, char** argv) { return citegen::run_cli(argc, argv); }
