"""Command-line verbs, exit codes, and the timed submission loop."""
import json
import subprocess
import sys

import pytest

from intentd.cli import (
    EXIT_OK,
    EXIT_PARTIAL,
    EXIT_USAGE,
    TOPOLOGY_ENV_VAR,
    build_parser,
    load_cli_topology,
    main,
    run_add_command,
    run_query_command,
    run_withdraw_command,
    timed_add,
)
from intentd.intents import Controller, IntentState, PointToPoint
from intentd.topology import ConnectPoint, Topology, device_id, serialize_topology
from conftest import CHAIN3_DOCUMENT, D1, D2, D3


def parse(argv):
    return build_parser().parse_args(argv)


@pytest.fixture
def chain3_file(tmp_path, chain3):
    path = tmp_path / "chain3.json"
    path.write_text(json.dumps(serialize_topology(chain3)))
    return str(path)


class TestTimedAdd:
    def test_counts_and_elapsed(self, controller):
        request = PointToPoint(ConnectPoint(D1, 1), ConnectPoint(D3, 2))
        result = timed_add(controller, request, 3)
        assert (result.submitted, result.installed, result.failed) == (3, 3, 0)
        assert result.elapsed_ms > 0
        assert controller.installed_rules() == 9

    def test_capacity_stops_the_loop(self, chain3):
        ctrl = Controller(chain3, capacity=2)
        request = PointToPoint(ConnectPoint(D1, 1), ConnectPoint(D3, 2))
        result = timed_add(ctrl, request, 10)
        assert result.submitted == 2
        assert result.installed == 2

    def test_failures_are_counted_not_raised(self):
        topo = Topology({D1: [1], D2: [1]}, [])
        ctrl = Controller(topo)
        request = PointToPoint(ConnectPoint(D1, 1), ConnectPoint(D2, 1))
        result = timed_add(ctrl, request, 4)
        assert (result.installed, result.failed) == (0, 4)


class TestAddVerbs:
    def test_p2p_installs_and_prints_json(self, controller, capsys):
        args = parse(
            ["add-point-to-point-intent", f"{D1}/1", f"{D3}/2", "--output", "json"]
        )
        assert run_add_command(args, controller) == EXIT_OK
        row = json.loads(capsys.readouterr().out)
        assert row["installed"] == 1 and row["failed"] == 0
        assert controller.installed_rules() == 3

    def test_count_repeats_submission(self, controller, capsys):
        args = parse(["add-point-to-point-intent", f"{D1}/1", f"{D3}/2", "--count", "5"])
        assert run_add_command(args, controller) == EXIT_OK
        assert len(controller.list()) == 5
        assert controller.installed_rules() == 15

    def test_csv_output_shape(self, controller, capsys):
        args = parse(
            ["add-point-to-point-intent", f"{D1}/1", f"{D3}/2", "--output", "csv"]
        )
        run_add_command(args, controller)
        header, row = capsys.readouterr().out.strip().splitlines()
        assert header == "submitted,installed,failed,elapsed_ms"
        assert row.startswith("1,1,0,")

    def test_table_output_shape(self, controller, capsys):
        args = parse(["add-point-to-point-intent", f"{D1}/1", f"{D3}/2"])
        run_add_command(args, controller)
        out = capsys.readouterr().out
        assert "submitted=1" in out and "installed=1" in out

    def test_validation_error_is_usage(self, controller, capsys):
        args = parse(["add-point-to-point-intent", f"{D1}/1", f"{D1}/1"])
        assert run_add_command(args, controller) == EXIT_USAGE
        assert "error:" in capsys.readouterr().err

    def test_failed_installs_exit_partial(self, capsys):
        topo = Topology({D1: [1], D2: [1]}, [])
        ctrl = Controller(topo)
        args = parse(["add-point-to-point-intent", f"{D1}/1", f"{D2}/1"])
        assert run_add_command(args, ctrl) == EXIT_PARTIAL

    def test_capacity_cutoff_exits_partial(self, chain3, capsys):
        ctrl = Controller(chain3, capacity=2)
        args = parse(["add-point-to-point-intent", f"{D1}/1", f"{D3}/2", "--count", "9"])
        assert run_add_command(args, ctrl) == EXIT_PARTIAL

    def test_multi_to_single_takes_last_point_as_egress(self, controller):
        args = parse(
            ["add-multi-to-single-point-intent", f"{D1}/1", f"{D2}/1", f"{D3}/2"]
        )
        assert run_add_command(args, controller) == EXIT_OK
        (intent,) = controller.list()
        assert intent.request.egress == ConnectPoint(D3, 2)
        assert intent.request.ingresses == frozenset(
            {ConnectPoint(D1, 1), ConnectPoint(D2, 1)}
        )

    def test_multi_to_single_needs_two_points(self, controller, capsys):
        args = parse(["add-multi-to-single-point-intent", f"{D3}/2"])
        assert run_add_command(args, controller) == EXIT_USAGE

    def test_host_to_host(self, controller, capsys):
        args = parse(["add-host-to-host-intent", "h1", "h2"])
        assert run_add_command(args, controller) == EXIT_OK
        assert controller.installed_rules() == 6

    def test_priority_flag_reaches_rules(self, controller):
        args = parse(
            ["add-point-to-point-intent", f"{D1}/1", f"{D3}/2", "--priority", "42"]
        )
        run_add_command(args, controller)
        (intent,) = controller.list()
        assert intent.priority == 42


class TestQueryAndWithdraw:
    def test_listing_csv(self, controller, capsys):
        controller.submit(PointToPoint(ConnectPoint(D1, 1), ConnectPoint(D3, 2)))
        controller.submit(PointToPoint(ConnectPoint(D3, 2), ConnectPoint(D1, 1)))
        args = parse(["intents", "--output", "csv"])
        assert run_query_command(args, controller) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "id,type,state,rule_count"
        assert lines[1] == "1,P2P,INSTALLED,3"
        assert len(lines) == 3

    def test_listing_json_round_trips(self, controller, capsys):
        controller.submit(PointToPoint(ConnectPoint(D1, 1), ConnectPoint(D3, 2)))
        args = parse(["intents", "--output", "json"])
        run_query_command(args, controller)
        docs = json.loads(capsys.readouterr().out)
        assert docs[0]["state"] == "INSTALLED"

    def test_withdraw_round_trip(self, controller, capsys):
        iid = controller.submit(PointToPoint(ConnectPoint(D1, 1), ConnectPoint(D3, 2)))
        args = parse(["withdraw", str(iid)])
        assert run_withdraw_command(args, controller) == EXIT_OK
        assert controller.installed_rules() == 0
        assert controller.get(iid).state is IntentState.WITHDRAWN

    def test_withdraw_unknown_is_usage(self, controller, capsys):
        args = parse(["withdraw", "404"])
        assert run_withdraw_command(args, controller) == EXIT_USAGE


class TestTopologySelection:
    def test_default_is_builtin_chain(self, monkeypatch):
        monkeypatch.delenv(TOPOLOGY_ENV_VAR, raising=False)
        topo = load_cli_topology(None)
        assert len(topo.device_ids) == 5

    def test_environment_variable_used(self, monkeypatch, chain3_file, chain3):
        monkeypatch.setenv(TOPOLOGY_ENV_VAR, chain3_file)
        assert load_cli_topology(None) == chain3

    def test_flag_beats_environment(self, monkeypatch, chain3_file, tmp_path, chain3):
        other = tmp_path / "tiny.json"
        other.write_text(json.dumps({"devices": [{"id": D1, "ports": [1]}]}))
        monkeypatch.setenv(TOPOLOGY_ENV_VAR, chain3_file)
        assert load_cli_topology(str(other)).device_ids == (D1,)

    def test_missing_file_is_usage(self, capsys, monkeypatch, tmp_path):
        monkeypatch.delenv(TOPOLOGY_ENV_VAR, raising=False)
        code = main(
            ["intents", "--topology", str(tmp_path / "absent.json")]
        )
        assert code == EXIT_USAGE


class TestMainEndToEnd:
    def test_add_on_default_topology(self, capsys, monkeypatch):
        monkeypatch.delenv(TOPOLOGY_ENV_VAR, raising=False)
        code = main(
            [
                "add-point-to-point-intent",
                f"{device_id(1)}/1",
                f"{device_id(5)}/2",
                "--output",
                "json",
            ]
        )
        assert code == EXIT_OK
        assert json.loads(capsys.readouterr().out)["installed"] == 1

    def test_add_with_topology_file(self, capsys, chain3_file):
        code = main(
            ["add-host-to-host-intent", "h1", "h2", "--topology", chain3_file]
        )
        assert code == EXIT_OK

    def test_malformed_connect_point_is_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["add-point-to-point-intent", "bogus", f"{D3}/2"])
        assert exc.value.code == EXIT_USAGE

    def test_zero_count_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(
                ["add-point-to-point-intent", f"{D1}/1", f"{D3}/2", "--count", "0"]
            )
        assert exc.value.code == EXIT_USAGE

    def test_console_script_help(self):
        proc = subprocess.run(
            [sys.executable, "-m", "intentd.cli", "--help"],
            capture_output=True,
            text=True,
            timeout=30,
        )
        assert proc.returncode == 0
        assert "add-point-to-point-intent" in proc.stdout


class TestInterfaceEquivalence:
    def test_cli_and_rest_install_identical_rule_shapes(self, chain3, rest):
        _, client = rest
        status, _ = client.post_intent(
            {"type": "P2P", "ingress": f"{D1}/1", "egress": f"{D3}/2", "priority": 77}
        )
        assert status == 201
        rest_ctrl = rest[0]

        cli_ctrl = Controller(chain3)
        args = parse(
            ["add-point-to-point-intent", f"{D1}/1", f"{D3}/2", "--priority", "77"]
        )
        assert run_add_command(args, cli_ctrl) == EXIT_OK

        def shapes(ctrl):
            return {
                (r.device, r.selector.in_port, r.treatment.outputs, r.priority)
                for d in ctrl.topology.device_ids
                for r in ctrl.fabric.rules_for(d)
            }

        assert shapes(rest_ctrl) == shapes(cli_ctrl)
