public class Open {
    public Open() { }

    public void run() { }
}
