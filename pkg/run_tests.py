#!/usr/bin/env python3
"""
Test runner script for the self-guided diffusion toolkit.
Provides convenient commands for running different types of tests.
"""
import argparse
import os
import subprocess
import sys
from pathlib import Path


def run_command(cmd, description, env=None):
    """Run a command and handle the result"""
    print(f"\n{description}...")
    print(f"Running: {' '.join(cmd)}")

    result = subprocess.run(cmd, capture_output=True, text=True, env=env)

    if result.stdout.strip():
        print(result.stdout)
    if result.returncode != 0:
        print(f"{description} failed")
        if result.stderr.strip():
            print("Error output:")
            print(result.stderr)
        return False

    print(f"{description} completed successfully")
    return True


def run_unit_tests():
    """Run unit tests only"""
    cmd = [sys.executable, "-m", "pytest", "tests/unit/", "-v", "--tb=short"]
    return run_command(cmd, "Running unit tests")


def run_integration_tests():
    """Run integration tests only"""
    cmd = [sys.executable, "-m", "pytest", "tests/integration/", "-v", "--tb=short"]
    return run_command(cmd, "Running integration tests")


def run_all_tests():
    """Run all tests with coverage, spread over CPUs"""
    cmd = [sys.executable, "-m", "pytest", "tests/", "-n", "auto", "--cov=src", "--cov-report=term-missing"]
    return run_command(cmd, "Running all tests with coverage")


def run_tests_with_html_report():
    """Run tests and generate HTML coverage report"""
    cmd = [sys.executable, "-m", "pytest", "tests/", "--cov=src", "--cov-report=html:htmlcov", "--cov-report=term"]
    return run_command(cmd, "Running tests with HTML coverage report")


def run_acceptance_tests():
    """Run the desk-scale end-to-end checks (minutes on CPU)"""
    env = dict(os.environ, SGDM_RUN_ACCEPTANCE="1")
    cmd = [sys.executable, "-m", "pytest", "tests/acceptance/", "-v", "-m", "acceptance", "--tb=short"]
    return run_command(cmd, "Running acceptance tests", env=env)


def run_specific_test(test_path):
    """Run a specific test file or test function"""
    cmd = [sys.executable, "-m", "pytest", test_path, "-v", "--tb=short"]
    return run_command(cmd, f"Running specific test: {test_path}")


def run_fast_tests():
    """Run only fast tests (exclude slow marker)"""
    cmd = [sys.executable, "-m", "pytest", "tests/", "-v", "-m", "not slow", "--tb=short"]
    return run_command(cmd, "Running fast tests only")


def main():
    """Main test runner function"""
    parser = argparse.ArgumentParser(description="Test runner for the self-guided diffusion toolkit")
    parser.add_argument("command", nargs="?", default="all",
                        choices=["unit", "integration", "all", "html", "fast", "acceptance"],
                        help="Test command to run")
    parser.add_argument("--test", "-t", help="Run specific test file or function")

    args = parser.parse_args()

    project_root = Path(__file__).parent
    if project_root.resolve() != Path.cwd().resolve():
        os.chdir(project_root)

    commands = {
        "unit": run_unit_tests,
        "integration": run_integration_tests,
        "all": run_all_tests,
        "html": run_tests_with_html_report,
        "fast": run_fast_tests,
        "acceptance": run_acceptance_tests,
    }
    success = run_specific_test(args.test) if args.test else commands[args.command]()
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
