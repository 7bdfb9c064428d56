#include "hetrdme/cli.hpp"

int main(int argc, char** argv) { return hetrdme::run_cli(argc, argv); }
