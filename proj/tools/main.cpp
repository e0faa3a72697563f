#include "partclass/cli_app.hpp"

int main(int argc, char** argv) { return partclass::run_cli(argc, argv); }
