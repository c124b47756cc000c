package main

const sysPrompt = "You are a Go code reviewer."
