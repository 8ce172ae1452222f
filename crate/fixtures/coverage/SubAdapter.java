public class SubAdapter extends Adapter2 { }
