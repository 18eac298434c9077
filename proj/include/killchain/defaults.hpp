// defaults.hpp — built-in rule table (16 rules across the 7 kill-chain
// stages) and the named lists they reference. data/rules.json and
// data/lists.json ship the same documents for editing.

#pragma once

#include <string>

namespace killchain {

inline const std::string& default_rules_json() {
    static const std::string text = R"JSON({
  "version": 1,
  "rules": [
    {
      "name": "Untrusted_Read",
      "stage": "Initial_Compromise",
      "severity": "L",
      "families": ["READ", "RECV"],
      "params": {"subject": "P", "object": "S"},
      "object_kinds": ["Socket"],
      "predicate": [{"op": "not_in", "field": "object.ip", "list": "Trusted_IP_Addresses"}],
      "prereqs": []
    },
    {
      "name": "Make_Mem_Exec",
      "stage": "Initial_Compromise",
      "severity": "M",
      "families": ["MPROTECT"],
      "params": {"subject": "P", "object": "M"},
      "object_kinds": ["Memory"],
      "predicate": [{"op": "has_flag", "flag": "PROT_EXEC"}],
      "prereqs": [{"ref": "Untrusted_Read", "target": "P"}]
    },
    {
      "name": "Make_File_Exec",
      "stage": "Initial_Compromise",
      "severity": "H",
      "families": ["CHMOD"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [{"op": "has_flag", "flag": "PROT_EXEC"}],
      "prereqs": [
        {"ref": "Untrusted_Read", "target": "F"},
        {"ref": "Untrusted_Read", "target": "P"}
      ]
    },
    {
      "name": "Untrusted_File_Exec",
      "stage": "Initial_Compromise",
      "severity": "C",
      "families": ["EXEC"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [],
      "prereqs": [{"ref": "Untrusted_Read", "target": "F"}]
    },
    {
      "name": "Shell_Exec",
      "stage": "Establish_Foothold",
      "severity": "M",
      "families": ["EXEC"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [{"op": "in", "field": "object.path", "list": "Command_Line_Utilities"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "CnC",
      "stage": "Establish_Foothold",
      "severity": "L",
      "families": ["SEND"],
      "params": {"subject": "P", "object": "S"},
      "object_kinds": ["Socket"],
      "predicate": [{"op": "not_in", "field": "object.ip", "list": "Trusted_IP_Addresses"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "Sudo_Exec",
      "stage": "Privilege_Escalation",
      "severity": "H",
      "families": ["EXEC"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [{"op": "in", "field": "object.path", "list": "SuperUser_Tools"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "Switch_SU",
      "stage": "Privilege_Escalation",
      "severity": "H",
      "families": ["SETUID"],
      "params": {"subject": "P", "object": "U"},
      "object_kinds": ["User"],
      "predicate": [{"op": "in", "field": "object.uid", "list": "SuperUser_Group"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "Sensitive_Read",
      "stage": "Internal_Recon",
      "severity": "M",
      "families": ["READ"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [{"op": "in", "field": "object.path", "list": "Sensitive_Files"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "Sensitive_Command",
      "stage": "Internal_Recon",
      "severity": "H",
      "families": ["FORK", "EXEC"],
      "params": {"subject": "P", "object": "P2"},
      "object_kinds": ["Process", "File"],
      "predicate": [{"op": "in", "field": "object.name", "list": "Sensitive_Commands"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "Send_Internal",
      "stage": "Move_Laterally",
      "severity": "M",
      "families": ["SEND"],
      "params": {"subject": "P", "object": "S"},
      "object_kinds": ["Socket"],
      "predicate": [{"op": "in", "field": "object.ip", "list": "Internal_IP_Range"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "Sensitive_Leak",
      "stage": "Complete_Mission",
      "severity": "H",
      "families": ["SEND"],
      "params": {"subject": "P", "object": "S"},
      "object_kinds": ["Socket"],
      "predicate": [{"op": "not_in", "field": "object.ip", "list": "Trusted_IP_Addresses"}],
      "prereqs": [
        {"ref": "Internal_Reconnaissance", "target": "P"},
        {"ref": "Initial_Compromise", "target": "P"}
      ]
    },
    {
      "name": "Destroy_System",
      "stage": "Complete_Mission",
      "severity": "C",
      "families": ["WRITE", "UNLINK"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [{"op": "in", "field": "object.path", "list": "System_Critical_Files"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "Clear_Logs",
      "stage": "Cleanup_Tracks",
      "severity": "H",
      "families": ["UNLINK"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [{"op": "in", "field": "object.path", "list": "Log_Files"}],
      "prereqs": [{"ref": "Initial_Compromise", "target": "P"}]
    },
    {
      "name": "Sensitive_Temp_RM",
      "stage": "Cleanup_Tracks",
      "severity": "M",
      "families": ["UNLINK"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [],
      "prereqs": [
        {"ref": "Internal_Reconnaissance", "target": "F"},
        {"ref": "Initial_Compromise", "target": "P"}
      ]
    },
    {
      "name": "Untrusted_File_RM",
      "stage": "Cleanup_Tracks",
      "severity": "M",
      "families": ["UNLINK"],
      "params": {"subject": "P", "object": "F"},
      "object_kinds": ["File"],
      "predicate": [],
      "prereqs": [
        {"ref": "Initial_Compromise", "target": "F"},
        {"ref": "Initial_Compromise", "target": "P"}
      ]
    }
  ]
})JSON";
    return text;
}

inline const std::string& default_lists_json() {
    static const std::string text = R"JSON({
  "Trusted_IP_Addresses": [
    "127.0.0.0/8",
    "10.0.0.0/8",
    "172.16.0.0/12",
    "192.168.0.0/16",
    "151.101.0.0/16"
  ],
  "Internal_IP_Range": [
    "10.0.0.0/8",
    "172.16.0.0/12",
    "192.168.0.0/16"
  ],
  "Command_Line_Utilities": [
    "/bin/sh",
    "/bin/bash",
    "/bin/dash",
    "/bin/csh",
    "/bin/tcsh",
    "/bin/zsh",
    "/usr/bin/sh",
    "/usr/bin/bash",
    "/usr/bin/dash",
    "C:\\Windows\\System32\\cmd.exe",
    "C:\\Windows\\System32\\WindowsPowerShell\\v1.0\\powershell.exe"
  ],
  "SuperUser_Tools": [
    "/usr/bin/sudo",
    "/usr/bin/su",
    "/bin/su",
    "/usr/bin/doas",
    "/usr/bin/pkexec"
  ],
  "SuperUser_Group": ["0", "root", "wheel", "SYSTEM", "Administrators"],
  "Sensitive_Files": [
    "/etc/passwd",
    "/etc/shadow",
    "/etc/master.passwd",
    "/etc/sudoers",
    "*/id_rsa",
    "*password.txt",
    "*Passwd.txt",
    "*company_secret.txt"
  ],
  "Sensitive_Commands": [
    "whoami",
    "hostname",
    "netstat",
    "ifconfig",
    "ipconfig",
    "uname",
    "id",
    "ps",
    "arp"
  ],
  "System_Critical_Files": [
    "/boot/*",
    "/etc/init.d/*",
    "/etc/rc.d/*",
    "/sbin/init",
    "C:\\Windows\\System32\\config\\*"
  ],
  "Log_Files": [
    "/var/log/*",
    "/usr/log/*",
    "*nginx-error.log",
    "*.evtx",
    "C:\\Windows\\System32\\winevt\\*"
  ]
})JSON";
    return text;
}

}  // namespace killchain
