#!/usr/bin/env python3
"""Regenerates the bundled fixture corpus under data/fixtures.

The rules imitate community Snort 2.x signatures. Running the script twice
produces identical files.
"""
import csv
import io
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures"

WEB = "$EXTERNAL_NET any -> $HTTP_SERVERS $HTTP_PORTS"
WEB_OUT = "$HOME_NET any -> $EXTERNAL_NET $HTTP_PORTS"
WEB_IN = "$EXTERNAL_NET $HTTP_PORTS -> $HOME_NET any"

# (labels, protocol, addresses, msg, option body without msg/sid/rev)
RULES = []


def add(labels, proto, addr, msg, body, classtype):
    RULES.append((labels, proto, addr, msg, body, classtype))


# Exploit public-facing application
for i, (needle, extra) in enumerate([
    ("union", 'content:"select"; distance:0; http_uri; nocase;'),
    ("/etc/passwd", 'pcre:"/\\.\\.\\/+etc\\/passwd/Ui";'),
    ("${jndi:", 'content:"ldap|3a|//"; distance:0; nocase;'),
    ("%{(#_memberAccess", 'content:"ognl"; nocase;'),
    ("/cgi-bin/", 'content:"() {"; http_header; fast_pattern:only;'),
    ("xp_cmdshell", 'content:"exec"; nocase; http_client_body;'),
    ("/wp-admin/admin-ajax.php", 'content:"action=revslider_show_image"; http_uri;'),
    ("..%2f..%2f", 'http_raw_uri; content:"boot.ini"; nocase;'),
    ("SELECT%20", 'content:"FROM%20"; distance:0; http_uri; nocase;'),
]):
    add(["T1190"], "tcp", WEB, f"SERVER-WEBAPP injection attempt {i + 1}",
        f'flow:to_server,established; content:"{needle}"; http_uri; nocase; {extra}', "web-application-attack")

# Unix shell
for i, (needle, extra) in enumerate([
    ("/bin/sh", 'content:"-c"; distance:0;'),
    ("bash -i", 'content:">& /dev/tcp/"; distance:0;'),
    ("chmod +x", 'content:"/tmp/"; nocase;'),
    ("|3B|id|3B|", 'content:"uid="; nocase;'),
    ("/bin/busybox", 'content:"wget"; distance:0; nocase;'),
    ("nc -e /bin/sh", 'content:"|20|"; within:3;'),
    ("/usr/bin/python -c", 'content:"import socket"; nocase;'),
    ("curl -s", 'content:"| sh"; distance:0;'),
]):
    add(["T1059.004"], "tcp", "$EXTERNAL_NET any -> $HOME_NET any", f"OS-OTHER unix shell command {i + 1}",
        f'flow:to_server,established; content:"{needle}"; fast_pattern; {extra}', "attempted-admin")

# Command injection into web apps: both techniques
for i, (needle, cmd) in enumerate([
    ("ping.cgi", "/bin/sh"),
    ("diag.asp", "wget http"),
    ("setup.cgi", "chmod +x"),
]):
    add(["T1190", "T1059.004"], "tcp", WEB, f"SERVER-WEBAPP command injection {needle}",
        f'flow:to_server,established; content:"{needle}"; http_uri; content:"{cmd}"; nocase;',
        "web-application-attack")

# Network service discovery
for i, (flags, extra) in enumerate([
    ("S", 'dsize:0; detection_filter:track by_src, count 30, seconds 60;'),
    ("F", 'dsize:0;'),
    ("FPU", 'dsize:0;'),
    ("0", 'dsize:0; threshold:type both, track by_src, count 20, seconds 60;'),
    ("SF", 'dsize:0;'),
    ("A", 'ack:0; dsize:0;'),
]):
    add(["T1046"], "tcp", "$EXTERNAL_NET any -> $HOME_NET any", f"INDICATOR-SCAN nmap scan flags {flags}",
        f'flow:stateless; flags:{flags}; {extra}', "attempted-recon")
for i, needle in enumerate(["Nmap Scripting Engine", "masscan/1.0", "zgrab"]):
    add(["T1046"], "tcp", WEB, f"INDICATOR-SCAN scanner user agent {needle}",
        f'flow:to_server,established; content:"User-Agent|3A| "; http_header; content:"{needle}"; '
        f'distance:0; http_header; nocase;', "attempted-recon")

# Web protocol command and control
for i, (uri, ua) in enumerate([
    ("/gate.php", "Mozilla/4.0 (compatible; MSIE 6.0;)"),
    ("/submit.php?id=", "Opera/9.80"),
    ("/panel/connect.php", "WinHTTP"),
    ("/api/beacon", "Go-http-client/1.1"),
    ("/load.php?guid=", "NSIS_Inetc (Mozilla)"),
    ("/news/index.php?q=", "Microsoft Internet Explorer"),
    ("/wp-content/plugins/bot.php", "Mozilla/5.0 (Windows NT 6.1)"),
    ("/c2/tasks", "python-requests/2"),
]):
    add(["T1071.001"], "tcp", WEB_OUT, f"MALWARE-CNC trojan beacon {uri}",
        f'flow:to_server,established; content:"{uri}"; http_uri; content:"User-Agent|3A| {ua}"; http_header; '
        f'metadata:policy balanced-ips drop;', "trojan-activity")

# DNS command and control / tunneling
for i, (needle, extra) in enumerate([
    ("|01 00 00 01 00 00 00 00 00 00|", 'content:"|05|iodin"; nocase;'),
    ("|00 10 00 01|", 'byte_test:1,>,60,12;'),
    ("|01 00 00 01|", 'content:"|07|dnscat2"; nocase;'),
    ("|00 01 00 00 00 00 00 00|", 'content:"|03|bad|06|domain|03|com|00|"; nocase;'),
    ("|01 20 00 01|", 'pcre:"/[a-z0-9]{50,}\\x05/Ri";'),
    ("|00 00 29 10 00|", 'dsize:>400;'),
]):
    add(["T1071.004"], "udp", "$HOME_NET any -> any 53", f"MALWARE-CNC dns tunneling query {i + 1}",
        f'content:"{needle}"; depth:10; offset:2; {extra}', "trojan-activity")

# Ingress tool transfer
for i, (ext, extra) in enumerate([
    (".exe", 'file_data; content:"MZ"; within:2;'),
    (".dll", 'file_data; content:"This program cannot be run in DOS mode";'),
    (".ps1", 'file_data; content:"Invoke-"; nocase;'),
    (".sh", 'file_data; content:"#!/bin/"; within:7;'),
    (".elf", 'file_data; content:"|7F|ELF"; within:4;'),
    (".hta", 'file_data; content:"<script"; nocase;'),
    (".jar", 'file_data; content:"PK|03 04|"; within:4;'),
]):
    add(["T1105"], "tcp", WEB_IN, f"FILE-EXECUTABLE download of {ext} payload",
        f'flow:to_client,established; content:"{ext}"; http_header; nocase; {extra}', "policy-violation")
# Download over a beaconing channel carries both techniques
for uri in ["/update/bin.exe", "/dl/stage2.dll"]:
    add(["T1105", "T1071.001"], "tcp", WEB_OUT, f"MALWARE-CNC second stage fetch {uri}",
        f'flow:to_server,established; content:"{uri}"; http_uri; content:"User-Agent|3A| Wget"; http_header;',
        "trojan-activity")

# SMB admin shares
for i, (share, extra) in enumerate([
    ("ADMIN$", 'content:"|FF|SMB|75|"; depth:5; offset:4;'),
    ("IPC$", 'content:"|FF|SMB|A2|"; depth:5; offset:4;'),
    ("C$", 'content:"|FE|SMB"; depth:4; offset:4;'),
    ("ADMIN|00 24 00|", 'content:"|FE|SMB|03 00|"; depth:6; offset:4;'),
    ("\\\\PIPE\\\\svcctl", 'content:"|FF|SMB"; depth:4; offset:4; nocase;'),
    ("PSEXESVC", 'content:"|FF|SMB|A2|"; nocase;'),
]):
    add(["T1021.002"], "tcp", "$HOME_NET any -> $HOME_NET 445", f"POLICY-OTHER smb admin share access {i + 1}",
        f'flow:to_server,established; content:"{share}"; nocase; {extra}', "policy-violation")

# Brute force
for i, (port, needle, extra) in enumerate([
    ("22", "SSH-2.0-", 'detection_filter:track by_src, count 5, seconds 60;'),
    ("21", "530 Login incorrect", 'detection_filter:track by_dst, count 5, seconds 120;'),
    ("3389", "|03 00 00|", 'detection_filter:track by_src, count 10, seconds 30;'),
    ("23", "Login incorrect", 'detection_filter:track by_dst, count 5, seconds 60;'),
    ("110", "-ERR authentication failed", 'nocase; detection_filter:track by_dst, count 5, seconds 60;'),
    ("1433", "Login failed for user", 'nocase; detection_filter:track by_dst, count 5, seconds 60;'),
]):
    add(["T1110"], "tcp", f"$HOME_NET {port} -> $EXTERNAL_NET any" if i else f"$EXTERNAL_NET any -> $HOME_NET {port}",
        f"PROTOCOL-SERVICES brute force login attempt port {port}",
        f'flow:established; content:"{needle}"; {extra}', "unsuccessful-user")

# Network denial of service
for i, (proto, extra) in enumerate([
    ("icmp", 'itype:8; dsize:>1000; detection_filter:track by_dst, count 500, seconds 1;'),
    ("tcp", 'flags:S; detection_filter:track by_dst, count 1000, seconds 1;'),
    ("udp", 'content:"|17 00 03 2A|"; depth:4; dsize:>400;'),
    ("udp", 'content:"|00 00 00 00 00 01 00 00|"; depth:8; detection_filter:track by_dst, count 200, seconds 1;'),
    ("icmp", 'itype:3; icode:3; detection_filter:track by_src, count 300, seconds 1;'),
    ("tcp", 'flags:R; detection_filter:track by_dst, count 800, seconds 1;'),
]):
    add(["T1498"], proto, "$EXTERNAL_NET any -> $HOME_NET any", f"DOS flood traffic {i + 1}", extra, "attempted-dos")

# Web shells
for i, (needle, extra) in enumerate([
    ("c99shell", 'nocase;'),
    ("eval(base64_decode(", 'http_client_body; nocase;'),
    ("cmd=", 'http_uri; content:"whoami"; nocase;'),
    ("r57shell", 'nocase;'),
    ("China Chopper", 'http_client_body; content:"z0="; nocase;'),
    ("/shell.jsp?cmd=", 'http_uri; nocase;'),
]):
    add(["T1505.003"], "tcp", WEB, f"MALWARE-BACKDOOR web shell access {i + 1}",
        f'flow:to_server,established; content:"{needle}"; {extra}', "web-application-attack")

# Rare techniques (fewer than five rules each)
for needle in ["powershell -enc", "IEX (New-Object Net.WebClient)", "-nop -w hidden"]:
    add(["T1059.001"], "tcp", "$EXTERNAL_NET any -> $HOME_NET any", f"INDICATOR-OBFUSCATION powershell {needle}",
        f'flow:established; content:"{needle}"; nocase;', "attempted-user")
add(["T1105", "T1059.001"], "tcp", WEB_IN, "FILE-OTHER powershell download cradle",
    'flow:to_client,established; file_data; content:"DownloadString("; nocase;', "attempted-user")
for ext in [".docm", ".xlsm"]:
    add(["T1566.001"], "tcp", "$EXTERNAL_NET any -> $SMTP_SERVERS 25", f"FILE-OFFICE macro attachment {ext}",
        f'flow:to_server,established; content:"filename="; nocase; content:"{ext}"; distance:0; nocase;',
        "trojan-activity")
for needle in ["YOUR FILES ARE ENCRYPTED", ".locked"]:
    add(["T1486"], "tcp", "$HOME_NET any -> $HOME_NET 445", f"MALWARE-OTHER ransomware note {needle}",
        f'flow:to_server,established; content:"{needle}"; nocase;', "trojan-activity")
add(["T1003"], "tcp", "$HOME_NET any -> $HOME_NET 445", "OS-WINDOWS lsass dump transfer",
    'flow:to_server,established; content:"lsass.dmp"; nocase;', "successful-admin")
for port in ["1080", "3128"]:
    add(["T1090"], "tcp", f"$HOME_NET any -> $EXTERNAL_NET {port}", f"POLICY-OTHER outbound proxy port {port}",
        'flow:to_server,established; content:"CONNECT "; depth:8;', "policy-violation")


def rule_text(sid, proto, addr, msg, body, classtype):
    return (f'alert {proto} {addr} (msg:"{msg}"; {body} classtype:{classtype}; '
            f'sid:{sid}; rev:{1 + sid % 3};)')


def write_corpus():
    out = ROOT / "corpus"
    out.mkdir(parents=True, exist_ok=True)
    lines = ["# Community-style fixture rules", ""]
    labels = io.StringIO()
    w = csv.writer(labels, lineterminator="\n")
    w.writerow(["sid", "technique_id"])
    for n, (techs, proto, addr, msg, body, classtype) in enumerate(RULES):
        sid = 2100001 + n
        text = rule_text(sid, proto, addr, msg, body, classtype)
        if n % 17 == 5:
            # exercise line continuations
            cut = text.index(" classtype:")
            text = text[:cut] + " \\\n    " + text[cut + 1:]
        lines.append(text)
        for t in techs:
            w.writerow([sid, t])
    # one rule with no label row
    lines.append(rule_text(2199999, "tcp", "$HOME_NET any -> $EXTERNAL_NET 6667", "POLICY-SOCIAL irc nick change",
                           'flow:to_server,established; content:"NICK "; depth:5;', "policy-violation"))
    (out / "community.rules").write_text("\n".join(lines) + "\n")
    (out / "labels.csv").write_text(labels.getvalue())


MALFORMED = [
    'alert tcp $EXTERNAL_NET any -> $HOME_NET 80 msg:"no body"; sid:3000001;',
    'alarm tcp $EXTERNAL_NET any -> $HOME_NET 80 (msg:"unknown action"; sid:3000002;)',
    'alert tcpx $EXTERNAL_NET any -> $HOME_NET 80 (msg:"unknown protocol"; sid:3000003;)',
    'alert tcp $EXTERNAL_NET any => $HOME_NET 80 (msg:"unknown direction"; sid:3000004;)',
    'alert tcp $EXTERNAL_NET -> $HOME_NET 80 (msg:"six header tokens"; sid:3000005;)',
    'alert tcp $EXTERNAL_NET any -> $HOME_NET 80 (msg:"unterminated; sid:3000006;)',
    'alert tcp $EXTERNAL_NET any -> $HOME_NET 80 (msg:"bad sid"; sid:abc;)',
    'alert tcp $EXTERNAL_NET any -> $HOME_NET 80 (msg:"trailing"; sid:3000008;) extra',
    'alert tcp $EXTERNAL_NET any -> $HOME_NET 80 (msg:"empty keyword"; :oops; sid:3000009;)',
    'alert tcp $EXTERNAL_NET any -> $HOME_NET 80 (msg; sid:3000010;)',
]


def write_malformed():
    out = ROOT / "parser"
    out.mkdir(parents=True, exist_ok=True)
    (out / "malformed.rules").write_text("# each line below carries exactly one defect\n" + "\n".join(MALFORMED) + "\n")


def write_ingest():
    out = ROOT / "ingest"
    out.mkdir(parents=True, exist_ok=True)
    rules = [
        rule_text(4000001, "tcp", WEB, "SERVER-WEBAPP union select", 'content:"union"; nocase;',
                  "web-application-attack"),
        rule_text(4000002, "tcp", "$HOME_NET any -> $HOME_NET 445", "POLICY-OTHER admin share",
                  'content:"ADMIN$"; nocase;', "policy-violation"),
        rule_text(4000003, "udp", "$HOME_NET any -> any 53", "MALWARE-CNC dns tunnel",
                  'content:"|01 00 00 01|"; depth:4;', "trojan-activity"),
        rule_text(4000004, "tcp", WEB_IN, "FILE-EXECUTABLE exe download", 'file_data; content:"MZ";',
                  "policy-violation"),
        rule_text(4000005, "tcp", "$EXTERNAL_NET any -> $HOME_NET 22", "PROTOCOL-SERVICES ssh brute force",
                  'content:"SSH-2.0-"; detection_filter:track by_src, count 5, seconds 60;', "unsuccessful-user"),
    ]
    (out / "rules.rules").write_text("\n".join(rules) + "\n")
    rows = [
        (4000001, "T1190"), (4000001, "T1059.004"), (4000002, "T1021.002"), (4000003, "T1071.004"),
        (4000003, "T1071"), (4000004, "T1105"), (4000004, "T1071.001"),
    ]
    (out / "labels.csv").write_text("sid,technique_id\n" + "".join(f"{s},{t}\n" for s, t in rows))


if __name__ == "__main__":
    write_corpus()
    write_malformed()
    write_ingest()
    print(f"{len(RULES) + 1} corpus rules written to {ROOT}")
